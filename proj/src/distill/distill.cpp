#include "distill/distill.hpp"

#include <charconv>
#include <cmath>

#include "core/hash.hpp"

namespace amc::kd {

void DistillConfig::validate() const {
  if (!(temperature > 0.0)) throw ParameterError("temperature must be positive");
  if (alpha < 0.0 || alpha > 1.0) throw ParameterError("alpha must be in [0,1]");
  train.validate();
}

nn::TrainResult distill(const nn::ModelGraph& teacher, nn::ModelGraph& student,
                        const rf::Dataset& d, const DistillConfig& cfg) {
  cfg.validate();
  if (teacher.provenance.count("trained") == 0) {
    throw ContractError("teacher model is not marked trained");
  }

  student.provenance["distill_teacher_hash"] = hex64(nn::param_hash(teacher));
  student.provenance["distill_temperature"] = std::to_string(cfg.temperature);
  student.provenance["distill_alpha"] = std::to_string(cfg.alpha);
  student.provenance["distill_t2_scaling"] = cfg.t2_scaling ? "true" : "false";
  student.provenance["distill_seed"] = std::to_string(cfg.train.seed);

  if (cfg.alpha == 0.0) {
    // The loss degenerates to plain cross-entropy; take the identical
    // supervised path so the trajectory matches nn::train bitwise.
    return nn::train(student, d, cfg.train);
  }

  const double t = cfg.temperature;
  const double ld_weight = cfg.alpha * (cfg.t2_scaling ? t * t : 1.0);
  nn::LossFn loss_fn = [&teacher, &student, t, ld_weight, alpha = cfg.alpha](
                           Tape& tape, const TensorPtr& x,
                           const std::vector<int>& labels, Rng& rng) {
    auto teacher_logits = nn::forward_logits(teacher, nullptr, x);
    auto p_teacher = ops::softmax_t(nullptr, teacher_logits, t);

    nn::ForwardOptions opts;
    opts.training = true;
    opts.rng = &rng;
    auto logits = nn::forward_logits(student, &tape, x, opts);
    if (logits->shape() != teacher_logits->shape()) {
      throw DimensionError("teacher and student output dimensions differ");
    }
    auto p_student_t = ops::softmax_t(&tape, logits, t);
    auto l_d = ops::kl_divergence(&tape, p_teacher, p_student_t);

    auto p_student = ops::softmax_t(&tape, logits, 1.0);
    auto l_c = ops::cross_entropy(&tape, p_student, labels);

    return ops::add(&tape, ops::scale(&tape, l_d, ld_weight),
                    ops::scale(&tape, l_c, 1.0 - alpha));
  };
  auto result = nn::train_loop(student, d, d.train_idx, cfg.train, loss_fn);
  student.provenance["trained"] = "true";
  return result;
}

KDCase::KDCase(std::string student, std::uint64_t s_params, std::string teacher,
               std::uint64_t t_params)
    : student_arch(std::move(student)),
      teacher_arch(std::move(teacher)),
      student_params(s_params),
      teacher_params(t_params) {
  if (s_params == 0 || t_params == 0) {
    throw ParameterError("kd case: zero parameter count");
  }
  if (s_params >= t_params) {
    throw ParameterError("kd case: student (" + std::to_string(s_params) +
                         " params) must be smaller than teacher (" +
                         std::to_string(t_params) + ")");
  }
  reduction_ratio =
      static_cast<double>(s_params) / static_cast<double>(t_params);
}

std::vector<KDCase> paper_scale_cases() {
  const std::uint64_t vt = nn::paper_scale_params("vtcnn2");
  const std::uint64_t rn = nn::paper_scale_params("resnet");
  const std::uint64_t in = nn::paper_scale_params("inception");
  return {
      KDCase("vtcnn2", vt, "inception", in),
      KDCase("vtcnn2", vt, "resnet", rn),
      KDCase("resnet", rn, "inception", in),
  };
}

std::string kd_case_table_csv(const std::vector<KDCaseRow>& rows) {
  auto fmt = [](double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, p);
  };
  std::string csv =
      "case,student,teacher,reduction_ratio,acc_baseline,acc_distilled,delta\n";
  int case_no = 1;
  for (const auto& row : rows) {
    csv += std::to_string(case_no++) + "," + row.c.student_arch + "," +
           row.c.teacher_arch + "," + fmt(row.c.reduction_ratio) + ",";
    csv += row.acc_student_baseline ? fmt(*row.acc_student_baseline) : "";
    csv += ",";
    csv += row.acc_student_distilled ? fmt(*row.acc_student_distilled) : "";
    csv += ",";
    if (row.acc_student_baseline && row.acc_student_distilled) {
      csv += fmt(*row.acc_student_distilled - *row.acc_student_baseline);
    }
    csv += "\n";
  }
  return csv;
}

std::pair<nn::ModelGraph, nettrim::PruneReport> distilled_pruning(
    const nn::ModelGraph& teacher, nn::ModelGraph student, const rf::Dataset& d,
    const DistillConfig& kd_cfg, const nettrim::NetTrimConfig& nt_cfg) {
  distill(teacher, student, d, kd_cfg);
  return nettrim::prune_model(student, d, nt_cfg);
}

std::pair<nn::ModelGraph, pq::QuantReport> distilled_quantization(
    const nn::ModelGraph& teacher, nn::ModelGraph student, const rf::Dataset& d,
    const DistillConfig& kd_cfg, const pq::PQConfig& pq_cfg) {
  distill(teacher, student, d, kd_cfg);
  return pq::quantize_model(student, student.first_fc, pq_cfg);
}

}  // namespace amc::kd
