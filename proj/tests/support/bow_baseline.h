#pragma once

// Per-document bag-of-words logistic scorer. Each candidate is represented
// only by the word counts of the documents that mention it; one shared
// weight vector scores candidates and a softmax picks among them. It sees no
// cross-document structure, so on a corpus where the answer is identifiable
// only by chaining documents it should stay at chance.

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "rgcnqa/graphbuild/instance.h"

namespace rgcnqa::testing {

class BowBaseline {
 public:
  void fit(const std::vector<Instance>& train, std::size_t epochs = 40, double lr = 0.5) {
    for (const auto& in : train)
      for (const auto& doc : in.supports)
        for (const auto& s : doc)
          for (const auto& t : s) vocab_.try_emplace(normalize_token(t), vocab_.size());
    w_.assign(vocab_.size(), 0.0);
    for (std::size_t e = 0; e < epochs; ++e) {
      for (const auto& in : train) {
        const auto feats = features(in);
        const auto p = softmax(feats);
        const std::size_t gold = in.answer_index();
        for (std::size_t k = 0; k < feats.size(); ++k) {
          const double g = p[k] - (k == gold ? 1.0 : 0.0);
          for (const auto& [i, v] : feats[k]) w_[i] -= lr * g * v;
        }
      }
    }
  }

  double accuracy(const std::vector<Instance>& test) const {
    std::size_t hit = 0;
    for (const auto& in : test) {
      const auto p = softmax(features(in));
      std::size_t best = 0;
      for (std::size_t k = 1; k < p.size(); ++k)
        if (p[k] > p[best]) best = k;
      if (best == in.answer_index()) ++hit;
    }
    return static_cast<double>(hit) / static_cast<double>(test.size());
  }

 private:
  using Sparse = std::map<std::size_t, double>;

  std::vector<Sparse> features(const Instance& in) const {
    std::vector<Sparse> out(in.candidates.size());
    for (std::size_t k = 0; k < in.candidates.size(); ++k) {
      const auto cand = normalize_tokens(in.candidates[k]);
      for (const auto& doc : in.supports) {
        bool mentions = false;
        Sparse counts;
        for (const auto& s : doc) {
          const auto norm = normalize_tokens(s);
          for (std::size_t i = 0; i + cand.size() <= norm.size(); ++i) {
            if (std::equal(cand.begin(), cand.end(), norm.begin() + static_cast<std::ptrdiff_t>(i))) mentions = true;
          }
          for (const auto& t : norm) {
            auto it = vocab_.find(t);
            if (it != vocab_.end()) counts[it->second] += 1.0;
          }
        }
        if (mentions)
          for (const auto& [i, v] : counts) out[k][i] += v;
      }
    }
    return out;
  }

  std::vector<double> softmax(const std::vector<Sparse>& feats) const {
    std::vector<double> s(feats.size(), 0.0);
    double mx = -INFINITY;
    for (std::size_t k = 0; k < feats.size(); ++k) {
      for (const auto& [i, v] : feats[k]) s[k] += w_[i] * v;
      mx = std::max(mx, s[k]);
    }
    double z = 0.0;
    for (double& v : s) z += (v = std::exp(v - mx));
    for (double& v : s) v /= z;
    return s;
  }

  std::map<std::string, std::size_t> vocab_;
  std::vector<double> w_;
};

}  // namespace rgcnqa::testing
