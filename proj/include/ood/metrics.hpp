#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>

#include "ood/io.hpp"

namespace ood {

struct ScoreReport;

/// OOD is the positive class and a higher score means "more OOD".
struct EvalReport {
  double auroc = 0.0;
  double aupr = 0.0;
  std::optional<double> accuracy_at_threshold;
  std::size_t n_id = 0;
  std::size_t n_ood = 0;

  std::string to_json() const;
};

/// Mann-Whitney AUROC with midranks: ties between an ID and an OOD score
/// count one half.
double auroc(std::span<const double> scores_id, std::span<const double> scores_ood);

/// Average precision, OOD positive. Scores are swept from high to low and
/// every distinct score value is one operating point, so a block of tied
/// scores enters the curve together:
///   AP = sum_t (R_t - R_{t-1}) * P_t.
double aupr(std::span<const double> scores_id, std::span<const double> scores_ood);

/// Fraction of samples whose is_ood flag equals truth (1 = OOD).
double accuracy(const ScoreReport& report, const LabelVector& truth);

EvalReport evaluate(std::span<const double> scores_id, std::span<const double> scores_ood);

}  // namespace ood
