#include "ood/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <json.hpp>

#include "ood/error.hpp"
#include "ood/pipeline.hpp"

namespace ood {
namespace {

struct Tagged {
  double score;
  bool ood;
};

std::vector<Tagged> merge(std::span<const double> id, std::span<const double> ood) {
  if (id.empty() || ood.empty()) {
    throw Error(ErrorCode::kEmptyInput, "both score sets must be non-empty");
  }
  std::vector<Tagged> all;
  all.reserve(id.size() + ood.size());
  for (double s : id) all.push_back({s, false});
  for (double s : ood) all.push_back({s, true});
  for (const auto& t : all) {
    if (!std::isfinite(t.score)) throw Error(ErrorCode::kNonFiniteScore, "score is not finite");
  }
  return all;
}

}  // namespace

double auroc(std::span<const double> scores_id, std::span<const double> scores_ood) {
  auto all = merge(scores_id, scores_ood);
  std::stable_sort(all.begin(), all.end(),
                   [](const Tagged& a, const Tagged& b) { return a.score < b.score; });
  // Ranks are 1-based; a tie block of size t starting at rank r gets r + (t-1)/2.
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    std::size_t positives = 0;
    while (j < all.size() && all[j].score == all[i].score) positives += all[j++].ood;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    rank_sum += midrank * static_cast<double>(positives);
    i = j;
  }
  const auto n_id = static_cast<double>(scores_id.size());
  const auto n_ood = static_cast<double>(scores_ood.size());
  return (rank_sum - n_ood * (n_ood + 1.0) / 2.0) / (n_id * n_ood);
}

double aupr(std::span<const double> scores_id, std::span<const double> scores_ood) {
  auto all = merge(scores_id, scores_ood);
  std::stable_sort(all.begin(), all.end(),
                   [](const Tagged& a, const Tagged& b) { return a.score > b.score; });
  const auto n_ood = static_cast<double>(scores_ood.size());
  double ap = 0.0;
  std::size_t true_pos = 0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j].score == all[i].score) true_pos += all[j++].ood;
    const double recall = static_cast<double>(true_pos) / n_ood;
    const double precision = static_cast<double>(true_pos) / static_cast<double>(j);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
    i = j;
  }
  return ap;
}

double accuracy(const ScoreReport& report, const LabelVector& truth) {
  check_label_length(truth, report.size());
  if (truth.empty()) throw Error(ErrorCode::kEmptyInput, "no samples");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (!report.is_ood[i]) {
      throw Error(ErrorCode::kInvalidArgument, "report has not been classified");
    }
    correct += (*report.is_ood[i] ? 1u : 0u) == truth[i];
  }
  return static_cast<double>(correct) / static_cast<double>(truth.size());
}

EvalReport evaluate(std::span<const double> scores_id, std::span<const double> scores_ood) {
  EvalReport r;
  r.auroc = auroc(scores_id, scores_ood);
  r.aupr = aupr(scores_id, scores_ood);
  r.n_id = scores_id.size();
  r.n_ood = scores_ood.size();
  return r;
}

std::string EvalReport::to_json() const {
  nlohmann::json j;
  j["auroc"] = auroc;
  j["aupr"] = aupr;
  j["accuracy_at_threshold"] = accuracy_at_threshold ? nlohmann::json(*accuracy_at_threshold)
                                                     : nlohmann::json(nullptr);
  j["n_id"] = n_id;
  j["n_ood"] = n_ood;
  return j.dump(2);
}

}  // namespace ood
