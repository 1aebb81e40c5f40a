#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"
#include "common.hpp"
#include "faceval/errors.hpp"
#include "faceval/log.hpp"

namespace cli = faceval::cli;

namespace {

// Set FACEVAL_LOG=debug|info|warn|error|off for diagnostic verbosity.
constexpr const char* kDescription =
    "faceval - end-to-end face-analytics evaluation toolkit";

struct App {
  CLI::App app{kDescription};

  std::string config_path;
  uint64_t seed = 0;
  size_t seed_count = 0;

  cli::SynthOpts synth;
  cli::BalanceOpts balance;
  cli::ReconcileOpts reconcile;
  cli::EvalDetectOpts eval_detect;
  cli::EvalVerifyOpts eval_verify;
  cli::EvalVerifyOpts eval_e2e;
  cli::SweepOpts sweep;

  CLI::App* sub_synth = nullptr;
  CLI::App* sub_balance = nullptr;
  CLI::App* sub_reconcile = nullptr;
  CLI::App* sub_eval_detect = nullptr;
  CLI::App* sub_eval_verify = nullptr;
  CLI::App* sub_eval_e2e = nullptr;
  CLI::App* sub_sweep = nullptr;
};

void add_common(CLI::App* sub, App& a) {
  sub->add_option("--config", a.config_path,
                  "JSON config file; CLI flags override its fields");
  sub->add_option("--seed", a.seed, "RNG seed")->each([&a](const std::string&) {
    ++a.seed_count;
  });
}

void build(App& a) {
  a.app.require_subcommand(1);

  a.sub_synth = a.app.add_subcommand(
      "synth", "Generate a synthetic dataset with known ground truth");
  add_common(a.sub_synth, a);
  a.sub_synth->add_option("--out", a.synth.out_dir, "Output directory")
      ->required();
  a.sub_synth->add_option("--altered-pose", a.synth.altered_pose_out,
                          "Also write the uniform-pose-bins control manifest");
  a.sub_synth->add_option("--altered-pose-bins", a.synth.altered_pose_bins,
                          "Bin count for the pose control (default 36)");

  a.sub_balance = a.app.add_subcommand(
      "balance", "Plan balanced, pose-preserving evaluation subsets");
  add_common(a.sub_balance, a);
  a.sub_balance->add_option("--manifest", a.balance.manifest, "Dataset manifest");
  a.sub_balance->add_option("--out", a.balance.out_dir, "Output directory")
      ->required();
  a.sub_balance->add_option("--k", a.balance.k,
                            "Samples per (identity x cell), or 'auto'");
  a.sub_balance->add_option("--subsets", a.balance.subsets,
                            "Number of disjoint subsets (default 1)");
  a.sub_balance->add_option("--axis", a.balance.axis,
                            "Cell axis: illumination|modality|location|full_cell");
  a.sub_balance->add_option("--pose-mode", a.balance.pose_mode,
                            "preserve_original | uniform_bins");
  a.sub_balance->add_option("--pose-bins", a.balance.pose_bins,
                            "Uniform pose bins over [-180,180] (default 36)");
  a.sub_balance->add_option("--tolerance", a.balance.pose_tolerance,
                            "Max acceptable pose histogram distance");

  a.sub_reconcile = a.app.add_subcommand(
      "reconcile", "Make annotations consistent across camera modalities");
  add_common(a.sub_reconcile, a);
  a.sub_reconcile->add_option("--manifest", a.reconcile.manifest,
                              "Human-annotated manifest");
  a.sub_reconcile->add_option("--correspondences", a.reconcile.correspondences,
                              "RGB-IR keypoint correspondences (JSONL)");
  a.sub_reconcile->add_option("--out", a.reconcile.out_dir, "Output directory")
      ->required();
  a.sub_reconcile->add_option("--dedup-iou", a.reconcile.dedup_iou,
                              "Overlap threshold for duplicate merging");
  a.sub_reconcile->add_flag("--per-capture", a.reconcile.per_capture,
                            "Estimate one homography per capture instead of "
                            "per location");
  a.sub_reconcile->add_option("--ransac-threshold",
                              a.reconcile.ransac_threshold_px,
                              "Inlier threshold in pixels");
  a.sub_reconcile->add_option("--ransac-iterations",
                              a.reconcile.ransac_max_iterations,
                              "Max RANSAC iterations");
  a.sub_reconcile->add_option("--ransac-confidence",
                              a.reconcile.ransac_confidence,
                              "RANSAC success confidence");
  a.sub_reconcile->add_option("--ransac-min-inliers",
                              a.reconcile.ransac_min_inliers,
                              "Minimum consensus size");

  const auto add_gt_opts = [](CLI::App* sub, auto& opts) {
    sub->add_option("--manifest", opts.manifest, "Human-annotated manifest");
    sub->add_option("--reconciled", opts.reconciled,
                    "Reconciled manifest (enables --gt reconciled)");
    sub->add_option("--gt", opts.gt,
                    "Ground truth to evaluate against: human | reconciled "
                    "(default: reconciled when provided)");
    sub->add_option("--subset", opts.subset, "Balanced subset JSON");
  };

  a.sub_eval_detect = a.app.add_subcommand(
      "eval-detect", "Score detections: per-group average precision");
  add_common(a.sub_eval_detect, a);
  add_gt_opts(a.sub_eval_detect, a.eval_detect);
  a.sub_eval_detect->add_option("--detections", a.eval_detect.detections,
                                "Detector output (JSONL)");
  a.sub_eval_detect->add_option("--out", a.eval_detect.out_dir,
                                "Output directory")
      ->required();
  a.sub_eval_detect->add_option("--group-axis", a.eval_detect.axis,
                                "Report grouping axis");
  a.sub_eval_detect->add_option("--iou", a.eval_detect.iou,
                                "Matching IoU threshold (default 0.5)");
  a.sub_eval_detect->add_option("--qp", a.eval_detect.qp_label,
                                "QP label for report rows (default 'source')");

  const auto add_verify_opts = [](CLI::App* sub, cli::EvalVerifyOpts& opts) {
    sub->add_option("--embeddings", opts.embeddings,
                    "Unit-norm face descriptors (JSONL or FEV1 binary)");
    sub->add_option("--detections", opts.detections,
                    "Detector output (e2e mode)");
    sub->add_option("--out", opts.out_dir, "Output directory")->required();
    sub->add_option("--group-axis", opts.axis, "Report grouping axis");
    sub->add_option("--target-fpr", opts.target_fpr,
                    "Target false positive rate (default 0.01)");
    sub->add_option("--iou", opts.iou,
                    "Detection matching IoU threshold (e2e mode)");
    sub->add_option("--miss-policy", opts.miss_policy,
                    "genuine_fail | exclude_genuine");
    sub->add_option("--pair-policy", opts.pair_policy, "within_group | all");
    sub->add_option("--qp", opts.qp_label, "QP label for report rows");
    sub->add_option("--template", opts.template_path,
                    "Canonical 5-point landmark template JSON");
    sub->add_option("--align-out", opts.align_out,
                    "Write per-detection similarity transforms (JSONL)");
  };

  a.sub_eval_verify = a.app.add_subcommand(
      "eval-verify", "1:1 verification: TPR at the target FPR");
  add_common(a.sub_eval_verify, a);
  add_gt_opts(a.sub_eval_verify, a.eval_verify);
  a.sub_eval_verify->add_option("--mode", a.eval_verify.mode,
                                "perfect | e2e (default perfect)");
  add_verify_opts(a.sub_eval_verify, a.eval_verify);

  a.sub_eval_e2e = a.app.add_subcommand(
      "eval-e2e", "Sequential detection -> verification evaluation");
  add_common(a.sub_eval_e2e, a);
  add_gt_opts(a.sub_eval_e2e, a.eval_e2e);
  add_verify_opts(a.sub_eval_e2e, a.eval_e2e);
  a.eval_e2e.mode = "e2e";

  a.sub_sweep = a.app.add_subcommand(
      "sweep", "Run an evaluation per QP and merge the reports");
  add_common(a.sub_sweep, a);
  add_gt_opts(a.sub_sweep, a.sweep);
  a.sub_sweep->add_option("--detections", a.sweep.detections_pattern,
                          "Per-qp detections path with a {qp} placeholder");
  a.sub_sweep->add_option("--embeddings", a.sweep.embeddings,
                          "Embeddings (required for --metric e2e/both)");
  a.sub_sweep->add_option("--out", a.sweep.out_dir, "Output directory")
      ->required();
  a.sub_sweep->add_option("--metric", a.sweep.metric, "detect | e2e | both");
  a.sub_sweep->add_option("--qp-list", a.sweep.qp_list,
                          "Comma-separated QP values (default the six-QP sweep)");
  a.sub_sweep->add_option("--group-axis", a.sweep.axis, "Report grouping axis");
  a.sub_sweep->add_option("--iou", a.sweep.iou, "Matching IoU threshold");
  a.sub_sweep->add_option("--target-fpr", a.sweep.target_fpr,
                          "Target false positive rate");
  a.sub_sweep->add_option("--miss-policy", a.sweep.miss_policy,
                          "genuine_fail | exclude_genuine");
  a.sub_sweep->add_option("--pair-policy", a.sweep.pair_policy,
                          "within_group | all");
  a.sub_sweep->add_option("--encoder-cmd", a.sweep.encoder_cmd,
                          "External encoder template with {qp}/{input}/{output}");
  a.sub_sweep->add_option("--encoder-input", a.sweep.encoder_input,
                          "Input file handed to the encoder shim");
  a.sub_sweep->add_option("--encoder-output", a.sweep.encoder_output_pattern,
                          "Encoder output path pattern with {qp}");
}

// Fills flag values from the config document when the flag was not given
// on the command line.
void merge_config(App& a) {
  const cli::ConfigDoc doc(a.config_path);
  const auto count = [](const CLI::App* sub, const std::string& name) {
    const CLI::Option* opt = sub->get_option_no_throw(name);
    return opt == nullptr ? size_t{0} : opt->count();
  };

  if (a.sub_synth->parsed()) {
    // The synth config document is handled by the command itself.
    a.synth.config_path = a.config_path;
    if (a.seed_count > 0) a.synth.seed = a.seed;
  }
  if (a.sub_balance->parsed()) {
    const CLI::App* s = a.sub_balance;
    cli::BalanceOpts& o = a.balance;
    doc.merge(count(s, "--manifest"), "manifest", o.manifest);
    doc.merge(count(s, "--k"), "balance.k", o.k);
    if (count(s, "--k") == 0) {
      // Accept a numeric k in the config as well.
      if (const auto* v = doc.find("balance.k"); v && v->is_number_integer()) {
        o.k = std::to_string(v->get<int>());
      }
    }
    doc.merge(count(s, "--subsets"), "balance.subsets", o.subsets);
    doc.merge(count(s, "--axis"), "balance.axis", o.axis);
    doc.merge(count(s, "--pose-mode"), "balance.pose_mode", o.pose_mode);
    doc.merge(count(s, "--pose-bins"), "balance.pose_bins", o.pose_bins);
    doc.merge(count(s, "--tolerance"), "balance.pose_tolerance",
              o.pose_tolerance);
    o.seed = a.seed;
    doc.merge(a.seed_count, "seed", o.seed);
  }
  if (a.sub_reconcile->parsed()) {
    const CLI::App* s = a.sub_reconcile;
    cli::ReconcileOpts& o = a.reconcile;
    doc.merge(count(s, "--manifest"), "manifest", o.manifest);
    doc.merge(count(s, "--correspondences"), "correspondences",
              o.correspondences);
    doc.merge(count(s, "--dedup-iou"), "dedup_iou", o.dedup_iou);
    doc.merge(count(s, "--per-capture"), "per_capture", o.per_capture);
    doc.merge(count(s, "--ransac-threshold"), "ransac.threshold_px",
              o.ransac_threshold_px);
    doc.merge(count(s, "--ransac-iterations"), "ransac.max_iterations",
              o.ransac_max_iterations);
    doc.merge(count(s, "--ransac-confidence"), "ransac.confidence",
              o.ransac_confidence);
    doc.merge(count(s, "--ransac-min-inliers"), "ransac.min_inliers",
              o.ransac_min_inliers);
    o.seed = a.seed;
    doc.merge(a.seed_count, "seed", o.seed);
  }
  if (a.sub_eval_detect->parsed()) {
    const CLI::App* s = a.sub_eval_detect;
    cli::EvalDetectOpts& o = a.eval_detect;
    doc.merge(count(s, "--manifest"), "manifest", o.manifest);
    doc.merge(count(s, "--reconciled"), "reconciled", o.reconciled);
    doc.merge(count(s, "--gt"), "gt", o.gt);
    doc.merge(count(s, "--detections"), "detections", o.detections);
    doc.merge(count(s, "--subset"), "subset", o.subset);
    doc.merge(count(s, "--group-axis"), "group_axis", o.axis);
    doc.merge(count(s, "--iou"), "iou_threshold", o.iou);
    doc.merge(count(s, "--qp"), "qp", o.qp_label);
  }
  const auto merge_verify = [&](const CLI::App* s, cli::EvalVerifyOpts& o) {
    doc.merge(count(s, "--manifest"), "manifest", o.manifest);
    doc.merge(count(s, "--reconciled"), "reconciled", o.reconciled);
    doc.merge(count(s, "--gt"), "gt", o.gt);
    doc.merge(count(s, "--subset"), "subset", o.subset);
    doc.merge(count(s, "--embeddings"), "embeddings", o.embeddings);
    doc.merge(count(s, "--detections"), "detections", o.detections);
    doc.merge(count(s, "--group-axis"), "group_axis", o.axis);
    doc.merge(count(s, "--target-fpr"), "target_fpr", o.target_fpr);
    doc.merge(count(s, "--iou"), "iou_threshold", o.iou);
    doc.merge(count(s, "--miss-policy"), "miss_policy", o.miss_policy);
    doc.merge(count(s, "--pair-policy"), "pair_policy", o.pair_policy);
    doc.merge(count(s, "--qp"), "qp", o.qp_label);
    doc.merge(count(s, "--template"), "template", o.template_path);
    doc.merge(count(s, "--align-out"), "align_out", o.align_out);
  };
  if (a.sub_eval_verify->parsed()) {
    merge_verify(a.sub_eval_verify, a.eval_verify);
    doc.merge(count(a.sub_eval_verify, "--mode"), "mode", a.eval_verify.mode);
  }
  if (a.sub_eval_e2e->parsed()) {
    merge_verify(a.sub_eval_e2e, a.eval_e2e);
    a.eval_e2e.mode = "e2e";
  }
  if (a.sub_sweep->parsed()) {
    const CLI::App* s = a.sub_sweep;
    cli::SweepOpts& o = a.sweep;
    doc.merge(count(s, "--manifest"), "manifest", o.manifest);
    doc.merge(count(s, "--reconciled"), "reconciled", o.reconciled);
    doc.merge(count(s, "--gt"), "gt", o.gt);
    doc.merge(count(s, "--detections"), "detections_pattern",
              o.detections_pattern);
    doc.merge(count(s, "--embeddings"), "embeddings", o.embeddings);
    doc.merge(count(s, "--subset"), "subset", o.subset);
    doc.merge(count(s, "--metric"), "metric", o.metric);
    if (count(s, "--qp-list") == 0) {
      // The config may hold the qp list as a JSON array or a CSV string.
      if (const auto* v = doc.find("qp_list")) {
        if (v->is_array()) {
          std::string csv;
          for (const auto& qp : *v) {
            if (!csv.empty()) csv += ",";
            csv += std::to_string(qp.get<int>());
          }
          o.qp_list = csv;
        } else {
          o.qp_list = v->get<std::string>();
        }
      }
    }
    doc.merge(count(s, "--group-axis"), "group_axis", o.axis);
    doc.merge(count(s, "--iou"), "iou_threshold", o.iou);
    doc.merge(count(s, "--target-fpr"), "target_fpr", o.target_fpr);
    doc.merge(count(s, "--miss-policy"), "miss_policy", o.miss_policy);
    doc.merge(count(s, "--pair-policy"), "pair_policy", o.pair_policy);
    doc.merge(count(s, "--encoder-cmd"), "encoder_cmd", o.encoder_cmd);
    doc.merge(count(s, "--encoder-input"), "encoder_input", o.encoder_input);
    doc.merge(count(s, "--encoder-output"), "encoder_output",
              o.encoder_output_pattern);
  }
}

}  // namespace

int main(int argc, char** argv) {
  App a;
  build(a);
  try {
    a.app.parse(argc, argv);
    merge_config(a);
    if (a.sub_synth->parsed()) {
      if (a.seed_count > 0) a.synth.seed = a.seed;
      return cli::cmd_synth(a.synth);
    }
    if (a.sub_balance->parsed()) return cli::cmd_balance(a.balance);
    if (a.sub_reconcile->parsed()) return cli::cmd_reconcile(a.reconcile);
    if (a.sub_eval_detect->parsed()) return cli::cmd_eval_detect(a.eval_detect);
    if (a.sub_eval_verify->parsed()) return cli::cmd_eval_verify(a.eval_verify);
    if (a.sub_eval_e2e->parsed()) return cli::cmd_eval_verify(a.eval_e2e);
    if (a.sub_sweep->parsed()) return cli::cmd_sweep(a.sweep);
    return cli::kExitInvalid;
  } catch (const CLI::ParseError& e) {
    return a.app.exit(e) == 0 ? cli::kExitOk : cli::kExitInvalid;
  } catch (const faceval::ValidationError& e) {
    faceval::log_error(e.what());
    return cli::kExitInvalid;
  } catch (const faceval::ParseError& e) {
    faceval::log_error(e.what());
    return cli::kExitInvalid;
  } catch (const faceval::IoError& e) {
    faceval::log_error(e.what());
    return cli::kExitInvalid;
  } catch (const faceval::EvalError& e) {
    faceval::log_error(e.what());
    return cli::kExitInvalid;
  } catch (const faceval::GeometryError& e) {
    faceval::log_error(e.what());
    return cli::kExitInvalid;
  } catch (const std::exception& e) {
    faceval::log_error(std::string("internal error: ") + e.what());
    return cli::kExitInternal;
  }
}
