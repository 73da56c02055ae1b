#include "commands.hpp"

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <lane3d/dataset.hpp>
#include <lane3d/eval.hpp>
#include <lane3d/ewc.hpp>
#include <lane3d/trainer.hpp>

#include "svg.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace lane3d::tools {

namespace {

// ---------------------------------------------------------------------------
// Shared helpers.

void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
  jobs = std::max(1, jobs);
  if (jobs == 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> workers;
  std::exception_ptr error;
  std::mutex error_mutex;
  for (int t = 0; t < std::min(jobs, n); ++t) {
    workers.emplace_back([&]() {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (std::thread& w : workers) w.join();
  if (error) std::rethrow_exception(error);
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw_error(ErrorCode::IoError, "cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_error(ErrorCode::IoError, "cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw_error(ErrorCode::ConfigError, path + ": " + e.what());
  }
  return j;
}

void echo_config(const std::string& out_dir, const std::string& command, const json& cfg) {
  fs::create_directories(out_dir);
  json j;
  j["command"] = command;
  j["config"] = cfg;
  write_json_file(out_dir + "/effective_config.json", j);
}

json load_config_section(const std::string& config_path, const std::string& section) {
  if (config_path.empty()) return json::object();
  const json full = read_json_file(config_path);
  if (full.contains(section)) return full.at(section);
  return json::object();
}

template <typename T>
void file_override(CLI::App* cmd, const std::string& flag, const json& sec, const char* key,
                   T& target) {
  if (cmd->count(flag) == 0 && sec.contains(key)) {
    try {
      target = sec.at(key).get<T>();
    } catch (const json::exception& e) {
      throw_error(ErrorCode::ConfigError, std::string("config key ") + key + ": " + e.what());
    }
  }
}

std::string pred_file_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "pred_%04d.json", index);
  return buf;
}

bool is_dataset_dir(const std::string& path) { return fs::exists(path + "/manifest.json"); }

/// Ground-truth lanes per scene without loading feature maps.
struct GtOnly {
  YSampling ys;
  std::vector<std::vector<Lane3D>> scenes;
};

GtOnly load_gt_lanes(const std::string& dir) {
  const json manifest = read_json_file(dir + "/manifest.json");
  GtOnly gt;
  gt.ys = YSampling(manifest.at("y_samples").get<std::vector<double>>());
  for (const auto& entry : manifest.at("scenes")) {
    const LaneFile lanes = read_lane_file(dir + "/" + entry.at("dir").get<std::string>() +
                                          "/lanes.json");
    std::vector<Lane3D> scene;
    for (const Proposal& p : lanes.lanes) scene.push_back(p.lane);
    gt.scenes.push_back(std::move(scene));
  }
  return gt;
}

/// Pairs predictions with ground truth. Directory inputs pair pred_%04d.json
/// with the matching manifest scene; only scenes with a prediction file are
/// evaluated. File inputs form a single pair.
std::vector<ScenePair> collect_pairs(const std::string& pred_path, const std::string& gt_path) {
  std::vector<ScenePair> pairs;
  if (is_dataset_dir(gt_path)) {
    const GtOnly gt = load_gt_lanes(gt_path);
    for (size_t i = 0; i < gt.scenes.size(); ++i) {
      const std::string pred_file =
          fs::is_directory(pred_path) ? pred_path + "/" + pred_file_name(static_cast<int>(i))
                                      : pred_path;
      if (!fs::exists(pred_file)) continue;
      ScenePair pair;
      pair.preds = read_lane_file(pred_file).lanes;
      pair.gts = gt.scenes[i];
      pairs.push_back(std::move(pair));
      if (!fs::is_directory(pred_path)) break;  // single file pairs one scene
    }
  } else {
    ScenePair pair;
    pair.preds = read_lane_file(pred_path).lanes;
    for (const Proposal& p : read_lane_file(gt_path).lanes) pair.gts.push_back(p.lane);
    pairs.push_back(std::move(pair));
  }
  if (pairs.empty()) throw_error(ErrorCode::IoError, "no prediction/ground-truth pairs found");
  return pairs;
}

std::string csv_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
  std::string out;
  std::string config;
  uint64_t seed = 0;
  int jobs = 1;
  DatasetOptions opts;
};

int run_synth(CLI::App* cmd, SynthArgs& args) {
  const json sec = load_config_section(args.config, "synth");
  file_override(cmd, "--scenes", sec, "num_scenes", args.opts.num_scenes);
  file_override(cmd, "--frames", sec, "frames_per_scene", args.opts.frames_per_scene);
  file_override(cmd, "--ego-speed", sec, "ego_speed", args.opts.ego_speed);
  file_override(cmd, "--ground", sec, "ground", args.opts.ground);
  file_override(cmd, "--curve-fraction", sec, "curve_fraction", args.opts.curve_fraction);
  file_override(cmd, "--max-grade", sec, "max_grade", args.opts.max_grade);
  file_override(cmd, "--occlusions", sec, "occlusions", args.opts.occlusions);
  file_override(cmd, "--num-categories", sec, "num_categories", args.opts.num_categories);
  file_override(cmd, "--seed", sec, "seed", args.seed);

  if (args.opts.num_scenes < 1) throw_error(ErrorCode::ConfigError, "need at least one scene");
  if (args.opts.frames_per_scene < 1) throw_error(ErrorCode::ConfigError, "frames must be >= 1");

  // Specs are drawn sequentially from the master generator so scene i is
  // independent of --jobs.
  std::mt19937_64 rng(args.seed);
  std::vector<SceneSpec> specs;
  for (int i = 0; i < args.opts.num_scenes; ++i) specs.push_back(sample_scene_spec(args.opts, rng));

  const int frames = args.opts.frames_per_scene;
  std::vector<std::vector<Scene>> generated(specs.size());
  parallel_for(static_cast<int>(specs.size()), args.jobs, [&](int i) {
    if (frames == 1) {
      generated[i] = {generate_scene(specs[i], args.seed + i)};
    } else {
      generated[i] = generate_sequence(specs[i], frames, args.opts.ego_speed, args.seed + i);
    }
  });

  Dataset data;
  data.ys = args.opts.base.ys;
  data.num_categories = args.opts.num_categories;
  for (size_t s = 0; s < generated.size(); ++s) {
    for (int f = 0; f < frames; ++f) {
      SceneData scene;
      scene.rig = generated[s][f].rig;
      scene.gts = std::move(generated[s][f].gt);
      scene.fm = std::move(generated[s][f].feature_map);
      scene.pose_to_prev = generated[s][f].pose_to_prev;
      scene.seq_id = static_cast<int>(s);
      scene.frame_idx = f;
      data.scenes.push_back(std::move(scene));
    }
  }
  write_dataset(args.out, data);

  json cfg;
  to_json(cfg, args.opts);
  cfg["seed"] = args.seed;
  cfg["out"] = args.out;
  echo_config(args.out, "synth", cfg);
  std::cout << "synth: wrote " << data.scenes.size() << " scenes to " << args.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string data;
  std::string out;
  std::string config;
  std::string fusion = "weighted_sum";
  TrainerConfig trainer;
  double val_fraction = 0.2;
};

int run_train(CLI::App* cmd, TrainArgs& args) {
  const json sec = load_config_section(args.config, "train");
  file_override(cmd, "--epochs", sec, "epochs", args.trainer.epochs);
  file_override(cmd, "--iters", sec, "iters", args.trainer.iters);
  file_override(cmd, "--temporal", sec, "temporal", args.trainer.temporal);
  file_override(cmd, "--fusion", sec, "fusion", args.fusion);
  file_override(cmd, "--hidden", sec, "hidden", args.trainer.hidden);
  file_override(cmd, "--lr", sec, "learning_rate", args.trainer.opt.learning_rate);
  file_override(cmd, "--weight-decay", sec, "weight_decay", args.trainer.opt.weight_decay);
  file_override(cmd, "--n-positives", sec, "n_positives", args.trainer.opt.n_positives);
  file_override(cmd, "--seed", sec, "seed", args.trainer.opt.seed);
  file_override(cmd, "--val-frac", sec, "val_fraction", args.val_fraction);
  if (!args.config.empty()) {
    const json full = read_json_file(args.config);
    if (full.contains("anchor_grid")) from_json(full.at("anchor_grid"), args.trainer.grid);
  }
  args.trainer.fusion = fusion_strategy_from_string(args.fusion);

  const Dataset data = load_dataset(args.data);
  std::vector<int> train_idx, val_idx;
  split_dataset(data, args.val_fraction, &train_idx, &val_idx);

  const TrainResult result = train_model(data, train_idx, args.trainer);

  fs::create_directories(args.out);
  json meta;
  meta["seed"] = args.trainer.opt.seed;
  meta["epochs"] = args.trainer.epochs;
  meta["data"] = args.data;
  write_checkpoint(args.out + "/checkpoint.a3lc", result.model, meta);

  std::ofstream curve(args.out + "/loss_curve.csv");
  if (!curve) throw_error(ErrorCode::IoError, "cannot write loss curve");
  curve << "epoch,loss\n";
  for (size_t e = 0; e < result.epoch_loss.size(); ++e) {
    curve << e << "," << csv_num(result.epoch_loss[e]) << "\n";
  }

  json cfg;
  cfg["data"] = args.data;
  cfg["epochs"] = args.trainer.epochs;
  cfg["iters"] = args.trainer.iters;
  cfg["temporal"] = args.trainer.temporal;
  cfg["fusion"] = args.fusion;
  cfg["hidden"] = args.trainer.hidden;
  cfg["learning_rate"] = args.trainer.opt.learning_rate;
  cfg["weight_decay"] = args.trainer.opt.weight_decay;
  cfg["n_positives"] = args.trainer.opt.n_positives;
  cfg["seed"] = args.trainer.opt.seed;
  cfg["val_fraction"] = args.val_fraction;
  to_json(cfg["anchor_grid"], args.trainer.grid);
  echo_config(args.out, "train", cfg);

  std::cout << "train: " << train_idx.size() << " scenes, initial loss "
            << csv_num(result.initial_loss) << ", final loss " << csv_num(result.final_loss)
            << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// predict

struct PredictArgs {
  std::string data;
  std::string ckpt;
  std::string out;
  std::string config;
  std::string split = "all";  // all | train | val
  double val_fraction = 0.2;
  int jobs = 1;
  PredictConfig pred;
};

int run_predict(CLI::App* cmd, PredictArgs& args) {
  const json sec = load_config_section(args.config, "predict");
  file_override(cmd, "--iters", sec, "iters", args.pred.iters);
  file_override(cmd, "--temporal", sec, "temporal", args.pred.temporal);
  file_override(cmd, "--min-score", sec, "min_score", args.pred.min_score);
  file_override(cmd, "--nms-threshold", sec, "nms_threshold", args.pred.nms.threshold);
  file_override(cmd, "--split", sec, "split", args.split);
  file_override(cmd, "--val-frac", sec, "val_fraction", args.val_fraction);

  const Dataset data = load_dataset(args.data);
  const Model model = read_checkpoint(args.ckpt);
  if (!(model.ys == data.ys)) {
    throw_error(ErrorCode::ConfigError, "checkpoint and dataset y-samplings differ");
  }
  if (args.pred.temporal && !model.fusion.has_value()) {
    throw_error(ErrorCode::ConfigError, "checkpoint holds no temporal fusion parameters");
  }
  const std::vector<Anchor> anchors = build_anchor_grid(model.grid, model.ys);

  std::vector<int> train_idx, val_idx, all_idx;
  split_dataset(data, args.val_fraction, &train_idx, &val_idx);
  for (size_t i = 0; i < data.scenes.size(); ++i) all_idx.push_back(static_cast<int>(i));
  const std::vector<int>& selected =
      args.split == "val" ? val_idx : (args.split == "train" ? train_idx : all_idx);
  if (args.split != "val" && args.split != "train" && args.split != "all") {
    throw_error(ErrorCode::ConfigError, "split must be all|train|val");
  }

  fs::create_directories(args.out);
  parallel_for(static_cast<int>(selected.size()), args.jobs, [&](int i) {
    const int scene_idx = selected[i];
    const std::vector<Proposal> proposals =
        predict_scene(model, data, scene_idx, anchors, args.pred);
    LaneFile file;
    file.ys = model.ys;
    file.lanes = proposals;
    const std::string path = args.out + "/" + pred_file_name(scene_idx);
    write_lane_file(path + ".tmp", file);
    fs::rename(path + ".tmp", path);
  });

  json cfg;
  cfg["data"] = args.data;
  cfg["ckpt"] = args.ckpt;
  cfg["iters"] = args.pred.iters;
  cfg["temporal"] = args.pred.temporal;
  cfg["min_score"] = args.pred.min_score;
  cfg["nms_threshold"] = args.pred.nms.threshold;
  cfg["split"] = args.split;
  cfg["val_fraction"] = args.val_fraction;
  echo_config(args.out, "predict", cfg);
  std::cout << "predict: wrote " << selected.size() << " scene predictions to " << args.out
            << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// refine

struct RefineArgs {
  std::string pred;
  std::string out;
  std::string config;
  int jobs = 1;
  EwcConfig ewc;
};

int run_refine(CLI::App* cmd, RefineArgs& args) {
  const json sec = load_config_section(args.config, "refine");
  file_override(cmd, "--alpha", sec, "alpha", args.ewc.alpha);
  file_override(cmd, "--steps", sec, "steps", args.ewc.steps);
  file_override(cmd, "--step-size", sec, "step_size", args.ewc.step_size);
  file_override(cmd, "--fork-slope-threshold", sec, "fork_slope_threshold",
                args.ewc.fork_slope_threshold);

  std::vector<std::string> files;
  if (fs::is_directory(args.pred)) {
    for (const auto& entry : fs::directory_iterator(args.pred)) {
      const std::string name = entry.path().filename().string();
      if (name.starts_with("pred_") && name.ends_with(".json")) files.push_back(name);
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw_error(ErrorCode::IoError, "no prediction files in " + args.pred);
  } else {
    files.push_back(fs::path(args.pred).filename().string());
  }
  const std::string in_dir =
      fs::is_directory(args.pred) ? args.pred : fs::path(args.pred).parent_path().string();

  fs::create_directories(args.out);
  parallel_for(static_cast<int>(files.size()), args.jobs, [&](int i) {
    LaneFile file = read_lane_file((in_dir.empty() ? "." : in_dir) + "/" + files[i]);
    std::vector<Lane3D> lanes;
    for (const Proposal& p : file.lanes) lanes.push_back(p.lane);
    const EwcResult refined = optimize_equal_width(lanes, args.ewc);
    for (size_t j = 0; j < file.lanes.size(); ++j) file.lanes[j].lane = refined.lanes[j];
    const std::string path = args.out + "/" + files[i];
    write_lane_file(path + ".tmp", file);
    fs::rename(path + ".tmp", path);
  });

  json cfg;
  to_json(cfg, args.ewc);
  cfg["pred"] = args.pred;
  echo_config(args.out, "refine", cfg);
  std::cout << "refine: wrote " << files.size() << " refined scene files to " << args.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string pred;
  std::string gt;
  std::string out;
  std::string config;
  std::string protocol = "standard";
  MetricsConfig metrics;
  OnceConfig once;
};

int run_eval(CLI::App* cmd, EvalArgs& args) {
  const json sec = load_config_section(args.config, "eval");
  file_override(cmd, "--protocol", sec, "protocol", args.protocol);
  file_override(cmd, "--tp-dist", sec, "tp_dist", args.metrics.tp_dist);
  file_override(cmd, "--tp-frac", sec, "tp_point_frac", args.metrics.tp_point_frac);
  file_override(cmd, "--close-max", sec, "close_max", args.metrics.close_max);
  file_override(cmd, "--far-max", sec, "far_max", args.metrics.far_max);
  file_override(cmd, "--squared-cost", sec, "squared_cost", args.metrics.squared_cost);
  file_override(cmd, "--tau-cd", sec, "tau_cd", args.once.tau_cd);
  file_override(cmd, "--iou-threshold", sec, "iou_threshold", args.once.iou_threshold);

  const std::vector<ScenePair> pairs = collect_pairs(args.pred, args.gt);

  json report;
  report["schema_version"] = 1;
  report["protocol"] = args.protocol;
  report["num_scenes"] = pairs.size();
  std::string csv_header, csv_row;

  if (args.protocol == "standard") {
    const MetricsReport m = compute_metrics(pairs, args.metrics);
    report["f1"] = m.f1;
    report["ap"] = m.ap;
    report["x_err_close"] = m.x_err_close;
    report["x_err_far"] = m.x_err_far;
    report["z_err_close"] = m.z_err_close;
    report["z_err_far"] = m.z_err_far;
    report["category_accuracy"] = m.category_accuracy;
    report["best_threshold"] = m.best_threshold;
    report["num_preds"] = m.num_preds;
    report["num_gts"] = m.num_gts;
    csv_header =
        "f1,ap,x_err_close,x_err_far,z_err_close,z_err_far,category_accuracy,best_threshold,"
        "num_preds,num_gts";
    csv_row = csv_num(m.f1) + "," + csv_num(m.ap) + "," + csv_num(m.x_err_close) + "," +
              csv_num(m.x_err_far) + "," + csv_num(m.z_err_close) + "," + csv_num(m.z_err_far) +
              "," + csv_num(m.category_accuracy) + "," + csv_num(m.best_threshold) + "," +
              std::to_string(m.num_preds) + "," + std::to_string(m.num_gts);
    std::cout << "eval: F1 " << csv_num(m.f1) << " AP " << csv_num(m.ap) << " x_err C/F "
              << csv_num(m.x_err_close) << "/" << csv_num(m.x_err_far) << " z_err C/F "
              << csv_num(m.z_err_close) << "/" << csv_num(m.z_err_far) << "\n";
  } else if (args.protocol == "once") {
    const OnceReport m = once_metrics(pairs, args.once);
    report["f1"] = m.f1;
    report["precision"] = m.precision;
    report["recall"] = m.recall;
    report["cd_error"] = m.cd_error;
    report["tau_cd"] = m.tau_cd;
    csv_header = "f1,precision,recall,cd_error,tau_cd";
    csv_row = csv_num(m.f1) + "," + csv_num(m.precision) + "," + csv_num(m.recall) + "," +
              csv_num(m.cd_error) + "," + csv_num(m.tau_cd);
    std::cout << "eval(once): F1 " << csv_num(m.f1) << " P " << csv_num(m.precision) << " R "
              << csv_num(m.recall) << " CD " << csv_num(m.cd_error) << "\n";
  } else {
    throw_error(ErrorCode::ConfigError, "protocol must be standard|once");
  }

  fs::create_directories(args.out);
  write_json_file(args.out + "/report.json", report);
  std::ofstream csv(args.out + "/report.csv");
  if (!csv) throw_error(ErrorCode::IoError, "cannot write report.csv");
  csv << csv_header << "\n" << csv_row << "\n";

  json cfg;
  cfg["pred"] = args.pred;
  cfg["gt"] = args.gt;
  cfg["protocol"] = args.protocol;
  cfg["tp_dist"] = args.metrics.tp_dist;
  cfg["tp_point_frac"] = args.metrics.tp_point_frac;
  cfg["close_max"] = args.metrics.close_max;
  cfg["far_max"] = args.metrics.far_max;
  cfg["squared_cost"] = args.metrics.squared_cost;
  cfg["tau_cd"] = args.once.tau_cd;
  cfg["iou_threshold"] = args.once.iou_threshold;
  echo_config(args.out, "eval", cfg);
  return 0;
}

// ---------------------------------------------------------------------------
// plot

struct PlotArgs {
  std::string pred;
  std::string gt;
  std::string out;
  int max_scenes = 8;
};

int run_plot(CLI::App*, PlotArgs& args) {
  const std::vector<ScenePair> pairs = collect_pairs(args.pred, args.gt);
  fs::create_directories(args.out);
  const int n = std::min<int>(args.max_scenes, static_cast<int>(pairs.size()));
  for (int i = 0; i < n; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "scene_%04d.svg", i);
    write_scene_svg(args.out + "/" + buf, pairs[i].preds, pairs[i].gts);
  }
  std::cout << "plot: wrote " << n << " SVG files to " << args.out << "\n";
  return 0;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"3D lane anchors on synthetic front-view features"};
  app.require_subcommand(1);

  SynthArgs synth_args;
  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--out", synth_args.out, "output dataset directory")->required();
  synth->add_option("--scenes", synth_args.opts.num_scenes, "number of scenes (sequences)");
  synth->add_option("--frames", synth_args.opts.frames_per_scene, "frames per sequence");
  synth->add_option("--ego-speed", synth_args.opts.ego_speed, "forward progress per frame (m)");
  synth->add_option("--ground", synth_args.opts.ground, "flat|slope|hill|mixed");
  synth->add_option("--curve-fraction", synth_args.opts.curve_fraction,
                    "fraction of curved scenes");
  synth->add_option("--max-grade", synth_args.opts.max_grade, "max slope grade");
  synth->add_flag("--occlusions", synth_args.opts.occlusions,
                  "add feature-zeroed occlusion spans");
  synth->add_option("--num-categories", synth_args.opts.num_categories,
                    "lane categories incl. background");
  synth->add_option("--seed", synth_args.seed, "master seed");
  synth->add_option("--jobs", synth_args.jobs, "parallel scene generation");
  synth->add_option("--config", synth_args.config, "JSON config file (section: synth)");

  TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train", "fit prediction heads");
  train->add_option("--data", train_args.data, "dataset directory")->required();
  train->add_option("--out", train_args.out, "output directory")->required();
  train->add_option("--epochs", train_args.trainer.epochs, "training epochs");
  train->add_option("--iters", train_args.trainer.iters, "refinement iterations (heads)");
  train->add_flag("--temporal", train_args.trainer.temporal, "train two-frame fusion");
  train->add_option("--fusion", train_args.fusion, "weighted_sum|linear");
  train->add_option("--hidden", train_args.trainer.hidden, "hidden width");
  train->add_option("--lr", train_args.trainer.opt.learning_rate, "learning rate");
  train->add_option("--weight-decay", train_args.trainer.opt.weight_decay, "weight decay");
  train->add_option("--n-positives", train_args.trainer.opt.n_positives,
                    "anchors assigned per ground truth");
  train->add_option("--seed", train_args.trainer.opt.seed, "seed");
  train->add_option("--val-frac", train_args.val_fraction, "validation fraction (held out)");
  train->add_option("--config", train_args.config,
                    "JSON config file (sections: train, anchor_grid)");

  PredictArgs predict_args;
  CLI::App* predict = app.add_subcommand("predict", "emit lane predictions per scene");
  predict->add_option("--data", predict_args.data, "dataset directory")->required();
  predict->add_option("--ckpt", predict_args.ckpt, "checkpoint file")->required();
  predict->add_option("--out", predict_args.out, "output directory")->required();
  predict->add_option("--iters", predict_args.pred.iters, "iterations to run (0 = all)");
  predict->add_flag("--temporal", predict_args.pred.temporal, "use two-frame fusion");
  predict->add_option("--min-score", predict_args.pred.min_score, "score floor");
  predict->add_option("--nms-threshold", predict_args.pred.nms.threshold, "NMS distance (m)");
  predict->add_option("--split", predict_args.split, "all|train|val");
  predict->add_option("--val-frac", predict_args.val_fraction, "validation fraction");
  predict->add_option("--jobs", predict_args.jobs, "parallel scenes");
  predict->add_option("--config", predict_args.config, "JSON config file (section: predict)");

  RefineArgs refine_args;
  CLI::App* refine = app.add_subcommand("refine", "equal-width post-optimization");
  refine->add_option("--pred", refine_args.pred, "prediction file or directory")->required();
  refine->add_option("--out", refine_args.out, "output directory")->required();
  refine->add_option("--alpha", refine_args.ewc.alpha, "adjustment regularizer");
  refine->add_option("--steps", refine_args.ewc.steps, "descent steps");
  refine->add_option("--step-size", refine_args.ewc.step_size, "descent step size");
  refine->add_option("--fork-slope-threshold", refine_args.ewc.fork_slope_threshold,
                     "width-slope above which a pair is a fork (m/m)");
  refine->add_option("--jobs", refine_args.jobs, "parallel scenes");
  refine->add_option("--config", refine_args.config, "JSON config file (section: refine)");

  EvalArgs eval_args;
  CLI::App* eval = app.add_subcommand("eval", "score predictions against ground truth");
  eval->add_option("--pred", eval_args.pred, "prediction file or directory")->required();
  eval->add_option("--gt", eval_args.gt, "ground-truth lane file or dataset directory")
      ->required();
  eval->add_option("--out", eval_args.out, "report output directory")->required();
  eval->add_option("--protocol", eval_args.protocol, "standard|once");
  eval->add_option("--tp-dist", eval_args.metrics.tp_dist, "TP point distance (m)");
  eval->add_option("--tp-frac", eval_args.metrics.tp_point_frac, "TP point fraction");
  eval->add_option("--close-max", eval_args.metrics.close_max, "close range end (m)");
  eval->add_option("--far-max", eval_args.metrics.far_max, "far range end (m)");
  eval->add_flag("--squared-cost", eval_args.metrics.squared_cost,
                 "match on sqrt of summed squared distances");
  eval->add_option("--tau-cd", eval_args.once.tau_cd, "ONCE Chamfer threshold (m)");
  eval->add_option("--iou-threshold", eval_args.once.iou_threshold, "ONCE IoU gate");
  eval->add_option("--config", eval_args.config, "JSON config file (section: eval)");

  PlotArgs plot_args;
  CLI::App* plot = app.add_subcommand("plot", "SVG overlays of predictions vs ground truth");
  plot->add_option("--pred", plot_args.pred, "prediction file or directory")->required();
  plot->add_option("--gt", plot_args.gt, "ground-truth lane file or dataset directory")
      ->required();
  plot->add_option("--out", plot_args.out, "output directory")->required();
  plot->add_option("--max-scenes", plot_args.max_scenes, "scenes to draw");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (synth->parsed()) return run_synth(synth, synth_args);
    if (train->parsed()) return run_train(train, train_args);
    if (predict->parsed()) return run_predict(predict, predict_args);
    if (refine->parsed()) return run_refine(refine, refine_args);
    if (eval->parsed()) return run_eval(eval, eval_args);
    if (plot->parsed()) return run_plot(plot, plot_args);
  } catch (const Error& e) {
    json err;
    err["error"] = to_string(e.code());
    err["message"] = e.what();
    std::cerr << err.dump() << "\n";
    switch (e.code()) {
      case ErrorCode::ConfigError: return 2;
      case ErrorCode::IoError: return 3;
      default: return 4;
    }
  } catch (const std::exception& e) {
    json err;
    err["error"] = "Unhandled";
    err["message"] = e.what();
    std::cerr << err.dump() << "\n";
    return 4;
  }
  return 0;
}

}  // namespace lane3d::tools
