// amc: RF modulation-classification model toolkit.
//
// Subcommands cover the full pipeline: synthetic dataset generation,
// training, evaluation, Net-Trim pruning, product quantization, retraining,
// knowledge distillation, the combined DP/DQ strategies, and report
// generation. Every run directory gets a manifest with input hashes, flags
// and metrics; identical flags and seeds reproduce byte-identical artifacts.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>

#include "core/bytes.hpp"
#include "core/hash.hpp"
#include "distill/distill.hpp"
#include "nettrim/nettrim.hpp"
#include "pq/pq.hpp"
#include "report/report.hpp"
#include "train/trainer.hpp"

namespace amc {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kExitUsage = 2;
constexpr int kExitFile = 3;
constexpr int kExitNumeric = 4;

struct RunManifest {
  std::string command;
  std::string method;  // BENCH / NT / PQ / KD / DP / DQ
  std::map<std::string, std::string> flags;
  std::map<std::string, std::pair<std::string, std::string>> inputs;  // flag -> (path, hash)
  std::map<std::string, double> metrics;
  std::vector<std::string> outputs;

  void add_input(const std::string& flag, const fs::path& path) {
    inputs[flag] = {path.string(), fs::is_directory(path) ? hash_tree(path)
                                                          : hash_file(path)};
  }

  void write(const fs::path& dir) const {
    json j;
    j["command"] = command;
    j["method"] = method;
    j["flags"] = flags;
    json in = json::object();
    for (const auto& [flag, ph] : inputs) {
      in[flag] = {{"path", ph.first}, {"fnv1a64", ph.second}};
    }
    j["inputs"] = in;
    j["metrics"] = metrics;
    j["outputs"] = outputs;
    write_text_file(dir / "manifest.json", j.dump(2) + "\n");
  }
};

rf::Dataset load_data(const fs::path& path, std::uint64_t split_seed) {
  return rf::load_dataset(path, split_seed);
}

// Shared post-step: evaluate on the test split, write eval.csv and stash
// overall accuracy so `report` can compare runs uniformly.
void write_eval_outputs(const nn::ModelGraph& m, const rf::Dataset& d,
                        const fs::path& dir, const std::string& label,
                        RunManifest& manifest) {
  const auto eval = nn::evaluate(m, d, nn::Split::kTest);
  write_text_file(dir / "eval.csv", nn::eval_csv(eval));
  report::ChartSeries series{label, {eval.acc_by_snr.begin(), eval.acc_by_snr.end()}};
  write_text_file(dir / "eval.svg", report::accuracy_chart_svg({series}));
  manifest.metrics["accuracy_overall"] = eval.overall_acc;
  manifest.outputs.push_back("eval.csv");
  manifest.outputs.push_back("eval.svg");
}

void write_confusion_csv(const nn::EvalResult& eval, const fs::path& path) {
  std::string csv = "true\\pred";
  for (const auto& name : rf::class_names()) csv += "," + name;
  csv += "\n";
  for (int t = 0; t < rf::kNumClasses; ++t) {
    csv += rf::class_names()[static_cast<std::size_t>(t)];
    for (int p = 0; p < rf::kNumClasses; ++p) {
      csv += "," + std::to_string(eval.confusion[static_cast<std::size_t>(t)]
                                                [static_cast<std::size_t>(p)]);
    }
    csv += "\n";
  }
  write_text_file(path, csv);
}

// ---- subcommand options ---------------------------------------------------

struct CommonTrainFlags {
  int epochs = 20;
  int batch = 128;
  double lr = 1e-3;
  std::string optimizer = "adam";
  std::uint64_t seed = 1;
  std::uint64_t split_seed = 1;

  void attach(CLI::App* app) {
    app->add_option("--epochs", epochs, "training epochs");
    app->add_option("--batch", batch, "mini-batch size");
    app->add_option("--lr", lr, "learning rate");
    app->add_option("--optimizer", optimizer, "adam|sgd")
        ->check(CLI::IsMember({"adam", "sgd"}));
    app->add_option("--seed", seed, "run seed");
    app->add_option("--split-seed", split_seed, "dataset 50/50 split seed");
  }

  nn::TrainConfig config() const {
    nn::TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.batch_size = batch;
    cfg.lr = lr;
    cfg.optimizer = optimizer == "sgd" ? nn::TrainConfig::Optimizer::kSgd
                                       : nn::TrainConfig::Optimizer::kAdam;
    cfg.seed = seed;
    return cfg;
  }

  void record(RunManifest& m) const {
    m.flags["epochs"] = std::to_string(epochs);
    m.flags["batch"] = std::to_string(batch);
    m.flags["lr"] = report::format_double(lr);
    m.flags["optimizer"] = optimizer;
    m.flags["seed"] = std::to_string(seed);
    m.flags["split_seed"] = std::to_string(split_seed);
  }
};

struct NetTrimFlags {
  double epsilon = 0.08;
  double epsilon_abs = 0.0;  // 0 = unset
  int samples = 2000;
  double rho = 1.0;
  int max_iter = 500;
  std::uint64_t seed = 1;

  void attach(CLI::App* app) {
    app->add_option("--epsilon", epsilon, "relative epsilon (x ||Y||_F)");
    app->add_option("--epsilon-abs", epsilon_abs, "absolute epsilon override");
    app->add_option("--samples", samples, "activation-matrix sample count");
    app->add_option("--rho", rho, "ADMM penalty");
    app->add_option("--max-iter", max_iter, "ADMM iteration budget");
  }

  nettrim::NetTrimConfig config(std::uint64_t run_seed) const {
    nettrim::NetTrimConfig cfg;
    cfg.epsilon_rel = epsilon;
    if (epsilon_abs > 0.0) cfg.epsilon_abs = epsilon_abs;
    cfg.n_samples = samples;
    cfg.rho = rho;
    cfg.max_iter = max_iter;
    cfg.seed = run_seed;
    return cfg;
  }

  void record(RunManifest& m) const {
    m.flags["epsilon"] = report::format_double(epsilon);
    if (epsilon_abs > 0.0) m.flags["epsilon_abs"] = report::format_double(epsilon_abs);
    m.flags["samples"] = std::to_string(samples);
    m.flags["rho"] = report::format_double(rho);
    m.flags["max_iter"] = std::to_string(max_iter);
  }
};

struct PqFlags {
  int subspaces = 2;
  int centroids = 256;

  void attach(CLI::App* app) {
    app->add_option("--subspaces", subspaces, "subspace count P");
    app->add_option("--centroids", centroids, "centroids per subspace K_s");
  }

  pq::PQConfig config(std::uint64_t run_seed) const {
    pq::PQConfig cfg;
    cfg.num_subspaces = subspaces;
    cfg.num_centroids = centroids;
    cfg.seed = run_seed;
    return cfg;
  }

  void record(RunManifest& m) const {
    m.flags["subspaces"] = std::to_string(subspaces);
    m.flags["centroids"] = std::to_string(centroids);
  }
};

struct KdFlags {
  double temperature = 10.0;
  double alpha = 0.5;
  bool no_t2_scaling = false;
  std::string student_arch = "vtcnn2";
  double width_scale = 1.0;

  void attach(CLI::App* app) {
    app->add_option("--temperature", temperature, "softmax temperature T");
    app->add_option("--alpha", alpha, "distillation-loss weight");
    app->add_flag("--no-t2-scaling", no_t2_scaling, "disable T^2 scaling of L_d");
    app->add_option("--student-arch", student_arch,
                    "vtcnn2|resnet-mini|inception-mini")
        ->check(CLI::IsMember({"vtcnn2", "resnet-mini", "inception-mini"}));
    app->add_option("--width-scale", width_scale, "mini-architecture width scale");
  }

  kd::DistillConfig config(const CommonTrainFlags& train) const {
    kd::DistillConfig cfg;
    cfg.temperature = temperature;
    cfg.alpha = alpha;
    cfg.t2_scaling = !no_t2_scaling;
    cfg.train = train.config();
    return cfg;
  }

  void record(RunManifest& m) const {
    m.flags["temperature"] = report::format_double(temperature);
    m.flags["alpha"] = report::format_double(alpha);
    m.flags["t2_scaling"] = no_t2_scaling ? "false" : "true";
    m.flags["student_arch"] = student_arch;
    m.flags["width_scale"] = report::format_double(width_scale);
  }
};

// Student initialization stream, shared by `distill`, `dp` and `dq` so the
// pipelines compose bitwise.
constexpr std::uint64_t kStudentInitTag = 41;

nn::ModelGraph distill_stage(const fs::path& teacher_dir, const rf::Dataset& data,
                             const KdFlags& kd, const CommonTrainFlags& train,
                             const fs::path& out_dir, RunManifest& manifest) {
  auto teacher = nn::load_model(teacher_dir);
  auto student = nn::build_architecture(
      kd.student_arch, Rng::derive_seed(train.seed, {kStudentInitTag}),
      kd.width_scale);
  auto result = kd::distill(teacher, student, data, kd.config(train));
  fs::create_directories(out_dir);
  write_text_file(out_dir / "loss.csv", nn::loss_history_csv(result));
  manifest.outputs.push_back("loss.csv");
  return student;
}

// ---- main ------------------------------------------------------------------

int run(int argc, char** argv) {
  CLI::App app{"RF modulation classification: training and model compression"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic IQ dataset");
  int gen_frames = 10;
  std::uint64_t gen_seed = 1;
  std::string gen_out;
  gen->add_option("--frames", gen_frames, "frames per (class, snr) cell")->required();
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--out", gen_out, "output .amcd file")->required();

  // train
  auto* tr = app.add_subcommand("train", "train a benchmark model");
  std::string tr_data, tr_arch = "vtcnn2", tr_out;
  double tr_width = 1.0;
  CommonTrainFlags tr_flags;
  tr->add_option("--data", tr_data, "dataset file")->required();
  tr->add_option("--arch", tr_arch, "vtcnn2|resnet-mini|inception-mini")
      ->check(CLI::IsMember({"vtcnn2", "resnet-mini", "inception-mini"}));
  tr->add_option("--width-scale", tr_width, "mini-architecture width scale");
  tr_flags.attach(tr);
  tr->add_option("--out", tr_out, "run directory")->required();

  // eval
  auto* ev = app.add_subcommand("eval", "evaluate a model on a dataset split");
  std::string ev_model, ev_data, ev_split = "test", ev_out, ev_label;
  std::uint64_t ev_split_seed = 1;
  ev->add_option("--model", ev_model, "model directory")->required();
  ev->add_option("--data", ev_data, "dataset file")->required();
  ev->add_option("--split", ev_split, "train|test")
      ->check(CLI::IsMember({"train", "test"}));
  ev->add_option("--split-seed", ev_split_seed, "dataset split seed");
  ev->add_option("--label", ev_label, "series label for the chart");
  ev->add_option("--out", ev_out, "run directory")->required();

  // prune
  auto* pr = app.add_subcommand("prune", "Net-Trim prune the first FC layer");
  std::string pr_model, pr_data, pr_out;
  NetTrimFlags pr_nt;
  CommonTrainFlags pr_misc;  // only seed/split-seed used
  pr->add_option("--model", pr_model, "model directory")->required();
  pr->add_option("--data", pr_data, "dataset file")->required();
  pr_nt.attach(pr);
  pr->add_option("--seed", pr_misc.seed, "activation sampling seed");
  pr->add_option("--split-seed", pr_misc.split_seed, "dataset split seed");
  pr->add_option("--out", pr_out, "run directory")->required();

  // quantize
  auto* qz = app.add_subcommand("quantize", "product-quantize the first FC layer");
  std::string qz_model, qz_data, qz_out;
  PqFlags qz_pq;
  std::uint64_t qz_seed = 1, qz_split_seed = 1;
  qz->add_option("--model", qz_model, "model directory")->required();
  qz->add_option("--data", qz_data, "dataset file")->required();
  qz_pq.attach(qz);
  qz->add_option("--seed", qz_seed, "k-means seed");
  qz->add_option("--split-seed", qz_split_seed, "dataset split seed");
  qz->add_option("--out", qz_out, "run directory")->required();

  // retrain
  auto* rt = app.add_subcommand("retrain", "retrain around a frozen PQ layer");
  std::string rt_model, rt_data, rt_out;
  double rt_fraction = 0.10;
  CommonTrainFlags rt_flags;
  rt->add_option("--model", rt_model, "model directory")->required();
  rt->add_option("--data", rt_data, "dataset file")->required();
  rt->add_option("--fraction", rt_fraction, "train-split fraction");
  rt_flags.attach(rt);
  rt->add_option("--out", rt_out, "run directory")->required();

  // distill
  auto* di = app.add_subcommand("distill", "knowledge-distill a student model");
  std::string di_teacher, di_data, di_out;
  KdFlags di_kd;
  CommonTrainFlags di_flags;
  di->add_option("--teacher", di_teacher, "trained teacher model directory")->required();
  di->add_option("--data", di_data, "dataset file")->required();
  di_kd.attach(di);
  di_flags.attach(di);
  di->add_option("--out", di_out, "run directory")->required();

  // dp
  auto* dp = app.add_subcommand("dp", "distilled pruning (KD then Net-Trim)");
  std::string dp_teacher, dp_data, dp_out;
  KdFlags dp_kd;
  CommonTrainFlags dp_flags;
  NetTrimFlags dp_nt;
  std::uint64_t dp_nt_seed = 0;
  dp->add_option("--teacher", dp_teacher, "trained teacher model directory")->required();
  dp->add_option("--data", dp_data, "dataset file")->required();
  dp_kd.attach(dp);
  dp_flags.attach(dp);
  dp_nt.attach(dp);
  dp->add_option("--nt-seed", dp_nt_seed, "activation sampling seed (default --seed)");
  dp->add_option("--out", dp_out, "run directory")->required();

  // dq
  auto* dq = app.add_subcommand("dq", "distilled quantization (KD then PQ)");
  std::string dq_teacher, dq_data, dq_out;
  KdFlags dq_kd;
  CommonTrainFlags dq_flags;
  PqFlags dq_pq;
  std::uint64_t dq_pq_seed = 0;
  dq->add_option("--teacher", dq_teacher, "trained teacher model directory")->required();
  dq->add_option("--data", dq_data, "dataset file")->required();
  dq_kd.attach(dq);
  dq_flags.attach(dq);
  dq_pq.attach(dq);
  dq->add_option("--pq-seed", dq_pq_seed, "k-means seed (default --seed)");
  dq->add_option("--out", dq_out, "run directory")->required();

  // report
  auto* rp = app.add_subcommand("report", "summarize runs into a comparison table");
  std::vector<std::string> rp_runs;
  std::string rp_out, rp_svg;
  rp->add_option("--runs", rp_runs, "run directories")->required()->expected(-1);
  rp->add_option("--out", rp_out, "summary CSV path")->required();
  rp->add_option("--svg", rp_svg, "combined accuracy-vs-SNR chart");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints help or the usage error
    return code == 0 ? 0 : kExitUsage;
  }

  if (gen->parsed()) {
    auto d = rf::build_dataset(gen_frames, gen_seed);
    rf::save_dataset(d, gen_out);
    std::cout << "wrote " << d.size() << " frames to " << gen_out << "\n";
    return 0;
  }

  if (tr->parsed()) {
    RunManifest manifest;
    manifest.command = "train";
    manifest.method = "BENCH";
    tr_flags.record(manifest);
    manifest.flags["arch"] = tr_arch;
    manifest.flags["width_scale"] = report::format_double(tr_width);
    manifest.add_input("data", tr_data);

    auto data = load_data(tr_data, tr_flags.split_seed);
    auto m = nn::build_architecture(
        tr_arch, Rng::derive_seed(tr_flags.seed, {kStudentInitTag}), tr_width);
    m.provenance["data_hash"] = manifest.inputs["data"].second;
    auto result = nn::train(m, data, tr_flags.config());

    const fs::path out(tr_out);
    fs::create_directories(out);
    nn::save_model(m, out / "model");
    write_text_file(out / "loss.csv", nn::loss_history_csv(result));
    manifest.outputs = {"model", "loss.csv"};
    write_eval_outputs(m, data, out, tr_arch, manifest);
    manifest.write(out);
    std::cout << "trained " << tr_arch << ": test accuracy "
              << manifest.metrics["accuracy_overall"] << "\n";
    return 0;
  }

  if (ev->parsed()) {
    RunManifest manifest;
    manifest.command = "eval";
    manifest.method = "BENCH";
    manifest.flags["split"] = ev_split;
    manifest.flags["split_seed"] = std::to_string(ev_split_seed);
    manifest.add_input("model", ev_model);
    manifest.add_input("data", ev_data);

    auto data = load_data(ev_data, ev_split_seed);
    auto m = nn::load_model(ev_model);
    const auto split = ev_split == "train" ? nn::Split::kTrain : nn::Split::kTest;
    const auto eval = nn::evaluate(m, data, split);

    const fs::path out(ev_out);
    fs::create_directories(out);
    write_text_file(out / "eval.csv", nn::eval_csv(eval));
    write_confusion_csv(eval, out / "confusion.csv");
    const std::string label = ev_label.empty() ? m.arch : ev_label;
    report::ChartSeries series{label, {eval.acc_by_snr.begin(), eval.acc_by_snr.end()}};
    write_text_file(out / "eval.svg", report::accuracy_chart_svg({series}));
    manifest.metrics["accuracy_overall"] = eval.overall_acc;
    manifest.outputs = {"confusion.csv", "eval.csv", "eval.svg"};
    manifest.write(out);
    std::cout << "accuracy " << eval.overall_acc << " over " << eval.total
              << " frames\n";
    return 0;
  }

  if (pr->parsed()) {
    RunManifest manifest;
    manifest.command = "prune";
    manifest.method = "NT";
    pr_nt.record(manifest);
    manifest.flags["seed"] = std::to_string(pr_misc.seed);
    manifest.flags["split_seed"] = std::to_string(pr_misc.split_seed);
    manifest.add_input("model", pr_model);
    manifest.add_input("data", pr_data);

    auto data = load_data(pr_data, pr_misc.split_seed);
    auto m = nn::load_model(pr_model);
    auto [pruned, rep] = nettrim::prune_model(m, data, pr_nt.config(pr_misc.seed));

    const fs::path out(pr_out);
    fs::create_directories(out);
    nn::save_model(pruned, out / "model");
    write_text_file(out / "prune.csv", nettrim::prune_report_csv(m.arch, rep));
    manifest.metrics["p_e"] = rep.pruning_efficiency;
    manifest.metrics["epsilon"] = rep.epsilon_used;
    manifest.metrics["residual"] = rep.constraint_residual;
    manifest.metrics["iterations"] = rep.iterations;
    manifest.outputs = {"model", "prune.csv"};
    write_eval_outputs(pruned, data, out, "NT", manifest);
    manifest.write(out);
    std::cout << "pruned " << m.arch << ": p_e " << rep.pruning_efficiency
              << ", test accuracy " << manifest.metrics["accuracy_overall"] << "\n";
    return 0;
  }

  if (qz->parsed()) {
    RunManifest manifest;
    manifest.command = "quantize";
    manifest.method = "PQ";
    qz_pq.record(manifest);
    manifest.flags["seed"] = std::to_string(qz_seed);
    manifest.flags["split_seed"] = std::to_string(qz_split_seed);
    manifest.add_input("model", qz_model);
    manifest.add_input("data", qz_data);

    auto data = load_data(qz_data, qz_split_seed);
    auto m = nn::load_model(qz_model);
    auto [quantized, rep] = pq::quantize_model(m, m.first_fc, qz_pq.config(qz_seed));

    const fs::path out(qz_out);
    fs::create_directories(out);
    nn::save_model(quantized, out / "model");
    manifest.metrics["C_Q"] = rep.compression;
    manifest.metrics["mse"] = rep.reconstruction_mse;
    manifest.outputs = {"model", "quantize.csv"};
    write_eval_outputs(quantized, data, out, "PQ", manifest);
    write_text_file(out / "quantize.csv",
                    pq::quant_report_csv(qz_pq.config(qz_seed), rep,
                                         manifest.metrics["accuracy_overall"]));
    manifest.write(out);
    std::cout << "quantized " << m.arch << ": C_Q " << rep.compression
              << ", test accuracy " << manifest.metrics["accuracy_overall"] << "\n";
    return 0;
  }

  if (rt->parsed()) {
    RunManifest manifest;
    manifest.command = "retrain";
    manifest.method = "PQ";
    rt_flags.record(manifest);
    manifest.flags["fraction"] = report::format_double(rt_fraction);
    manifest.add_input("model", rt_model);
    manifest.add_input("data", rt_data);

    auto data = load_data(rt_data, rt_flags.split_seed);
    auto m = nn::load_model(rt_model);
    auto result = pq::retrain_quantized(m, data, rt_flags.config(), rt_fraction);

    const fs::path out(rt_out);
    fs::create_directories(out);
    nn::save_model(m, out / "model");
    write_text_file(out / "loss.csv", nn::loss_history_csv(result));
    if (!m.codebooks.empty()) {
      manifest.metrics["C_Q"] = pq::compression_rate(
          64.0, m.codebooks.begin()->second.rows, m.codebooks.begin()->second.cols,
          m.codebooks.begin()->second.num_centroids,
          m.codebooks.begin()->second.num_subspaces);
    }
    manifest.outputs = {"model", "loss.csv"};
    write_eval_outputs(m, data, out, "PQ+retrain", manifest);
    manifest.write(out);
    std::cout << "retrained: test accuracy "
              << manifest.metrics["accuracy_overall"] << "\n";
    return 0;
  }

  if (di->parsed()) {
    RunManifest manifest;
    manifest.command = "distill";
    manifest.method = "KD";
    di_kd.record(manifest);
    di_flags.record(manifest);
    manifest.add_input("teacher", di_teacher);
    manifest.add_input("data", di_data);

    auto data = load_data(di_data, di_flags.split_seed);
    const fs::path out(di_out);
    auto student = distill_stage(di_teacher, data, di_kd, di_flags, out, manifest);
    nn::save_model(student, out / "model");
    manifest.outputs.push_back("model");
    write_eval_outputs(student, data, out, "KD", manifest);
    manifest.write(out);
    std::cout << "distilled " << di_kd.student_arch << ": test accuracy "
              << manifest.metrics["accuracy_overall"] << "\n";
    return 0;
  }

  if (dp->parsed()) {
    RunManifest manifest;
    manifest.command = "dp";
    manifest.method = "DP";
    dp_kd.record(manifest);
    dp_flags.record(manifest);
    dp_nt.record(manifest);
    const std::uint64_t nt_seed = dp->count("--nt-seed") ? dp_nt_seed : dp_flags.seed;
    manifest.flags["nt_seed"] = std::to_string(nt_seed);
    manifest.add_input("teacher", dp_teacher);
    manifest.add_input("data", dp_data);

    auto data = load_data(dp_data, dp_flags.split_seed);
    const fs::path out(dp_out);
    auto student = distill_stage(dp_teacher, data, dp_kd, dp_flags, out, manifest);
    nn::save_model(student, out / "distilled");
    manifest.outputs.push_back("distilled");
    auto [pruned, rep] = nettrim::prune_model(student, data, dp_nt.config(nt_seed));
    nn::save_model(pruned, out / "model");
    write_text_file(out / "prune.csv", nettrim::prune_report_csv("DP", rep));
    manifest.metrics["p_e"] = rep.pruning_efficiency;
    manifest.metrics["epsilon"] = rep.epsilon_used;
    manifest.metrics["residual"] = rep.constraint_residual;
    manifest.outputs.push_back("model");
    manifest.outputs.push_back("prune.csv");
    write_eval_outputs(pruned, data, out, "DP", manifest);
    manifest.write(out);
    std::cout << "dp: p_e " << rep.pruning_efficiency << ", test accuracy "
              << manifest.metrics["accuracy_overall"] << "\n";
    return 0;
  }

  if (dq->parsed()) {
    RunManifest manifest;
    manifest.command = "dq";
    manifest.method = "DQ";
    dq_kd.record(manifest);
    dq_flags.record(manifest);
    dq_pq.record(manifest);
    const std::uint64_t pq_seed = dq->count("--pq-seed") ? dq_pq_seed : dq_flags.seed;
    manifest.flags["pq_seed"] = std::to_string(pq_seed);
    manifest.add_input("teacher", dq_teacher);
    manifest.add_input("data", dq_data);

    auto data = load_data(dq_data, dq_flags.split_seed);
    const fs::path out(dq_out);
    auto student = distill_stage(dq_teacher, data, dq_kd, dq_flags, out, manifest);
    nn::save_model(student, out / "distilled");
    manifest.outputs.push_back("distilled");
    auto [quantized, rep] =
        pq::quantize_model(student, student.first_fc, dq_pq.config(pq_seed));
    nn::save_model(quantized, out / "model");
    manifest.metrics["C_Q"] = rep.compression;
    manifest.metrics["mse"] = rep.reconstruction_mse;
    manifest.outputs.push_back("model");
    manifest.outputs.push_back("quantize.csv");
    write_eval_outputs(quantized, data, out, "DQ", manifest);
    write_text_file(out / "quantize.csv",
                    pq::quant_report_csv(dq_pq.config(pq_seed), rep,
                                         manifest.metrics["accuracy_overall"]));
    manifest.write(out);
    std::cout << "dq: C_Q " << rep.compression << ", test accuracy "
              << manifest.metrics["accuracy_overall"] << "\n";
    return 0;
  }

  if (rp->parsed()) {
    std::vector<report::CompressionReport> rows;
    std::vector<report::ChartSeries> series;
    std::optional<double> benchmark_acc;
    for (const auto& run : rp_runs) {
      json manifest;
      try {
        manifest = json::parse(read_text_file(fs::path(run) / "manifest.json"));
      } catch (const json::exception& e) {
        throw FormatError("run manifest " + run + ": " + e.what());
      }
      report::CompressionReport row;
      row.run_label = fs::path(run).filename().string();
      row.method = report::method_from_name(manifest.at("method").get<std::string>());
      const auto& metrics = manifest.at("metrics");
      if (!metrics.contains("accuracy_overall")) {
        throw FormatError("run " + run + " has no accuracy metric");
      }
      row.accuracy_overall = metrics.at("accuracy_overall").get<double>();
      if (metrics.contains("p_e")) row.pruning_efficiency = metrics.at("p_e").get<double>();
      if (metrics.contains("C_Q")) row.compression = metrics.at("C_Q").get<double>();
      if (row.method == report::Method::kBenchmark && !benchmark_acc) {
        benchmark_acc = row.accuracy_overall;
      }
      // Accuracy-vs-SNR series from the run's eval.csv.
      const fs::path eval_path = fs::path(run) / "eval.csv";
      if (fs::exists(eval_path)) {
        report::ChartSeries s;
        s.label = std::string(report::method_name(row.method)) + ":" + row.run_label;
        const std::string text = read_text_file(eval_path);
        std::size_t pos = text.find('\n');
        while (pos != std::string::npos && pos + 1 < text.size()) {
          const std::size_t next = text.find('\n', pos + 1);
          const std::string line = text.substr(pos + 1, next - pos - 1);
          const std::size_t comma = line.find(',');
          if (comma != std::string::npos) {
            s.points.emplace_back(std::stoi(line.substr(0, comma)),
                                  std::stod(line.substr(comma + 1)));
            row.acc_by_snr.emplace_back(s.points.back());
          }
          pos = next;
        }
        series.push_back(std::move(s));
      }
      rows.push_back(std::move(row));
    }
    for (auto& row : rows) {
      if (benchmark_acc && row.method != report::Method::kBenchmark) {
        row.benchmark_delta = row.accuracy_overall - *benchmark_acc;
      }
    }
    write_text_file(rp_out, report::summary_csv(rows));
    if (!rp_svg.empty()) {
      write_text_file(rp_svg, report::accuracy_chart_svg(series));
    }
    std::cout << "wrote " << rows.size() << " rows to " << rp_out << "\n";
    return 0;
  }

  return 0;
}

}  // namespace
}  // namespace amc

int main(int argc, char** argv) {
  try {
    return amc::run(argc, argv);
  } catch (const amc::FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return amc::kExitFile;
  } catch (const amc::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return amc::kExitFile;
  } catch (const amc::NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return amc::kExitNumeric;
  } catch (const amc::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return amc::kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
