#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nettrim/nettrim.hpp"
#include "pq/pq.hpp"
#include "train/trainer.hpp"

namespace amc::kd {

struct DistillConfig {
  double temperature = 10.0;  // T used for both teacher and student softening
  double alpha = 0.5;         // weight of the distillation loss
  bool t2_scaling = true;     // multiply L_d by T^2 to keep its gradient scale
  nn::TrainConfig train;

  void validate() const;
};

// Vanilla knowledge distillation: per batch the frozen teacher and the
// student are softened at T, L_d = KL(teacher || student), L_c is the
// student's cross-entropy at T = 1, and L = alpha*L_d*(T^2?) + (1-alpha)*L_c.
// With alpha = 0 this takes the plain supervised path, bit-identical to
// nn::train with the same seed. Inference afterwards runs at T = 1.
nn::TrainResult distill(const nn::ModelGraph& teacher, nn::ModelGraph& student,
                        const rf::Dataset& d, const DistillConfig& cfg);

// Student/teacher pairing; constructing a case with a student at least as
// large as its teacher is rejected.
struct KDCase {
  std::string student_arch;
  std::string teacher_arch;
  std::uint64_t student_params = 0;
  std::uint64_t teacher_params = 0;
  double reduction_ratio = 0.0;

  KDCase(std::string student, std::uint64_t s_params, std::string teacher,
         std::uint64_t t_params);
};

struct KDCaseRow {
  KDCase c;
  std::optional<double> acc_student_baseline;
  std::optional<double> acc_student_distilled;
};

// The three paper-scale pairings (VTCNN2/Inception, VTCNN2/ResNet,
// ResNet/Inception) with ratios from the published parameter counts.
std::vector<KDCase> paper_scale_cases();

// CSV: case,student,teacher,reduction_ratio,acc_baseline,acc_distilled,delta
std::string kd_case_table_csv(const std::vector<KDCaseRow>& rows);

// Combined strategies: KD first, then one compression stage on the
// distilled student's first FC layer. Both are exact compositions — running
// the stages manually with the same seeds yields bitwise-identical models.
std::pair<nn::ModelGraph, nettrim::PruneReport> distilled_pruning(
    const nn::ModelGraph& teacher, nn::ModelGraph student, const rf::Dataset& d,
    const DistillConfig& kd_cfg, const nettrim::NetTrimConfig& nt_cfg);

std::pair<nn::ModelGraph, pq::QuantReport> distilled_quantization(
    const nn::ModelGraph& teacher, nn::ModelGraph student, const rf::Dataset& d,
    const DistillConfig& kd_cfg, const pq::PQConfig& pq_cfg);

}  // namespace amc::kd
