#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "g2t/pipeline.hpp"
#include "g2t/version.hpp"

namespace {

using namespace g2t;

std::pair<int, int> parse_size(const std::string& s) {
  const size_t x = s.find('x');
  if (x == std::string::npos || x == 0 || x + 1 >= s.size())
    throw UsageError("--size expects WxH, got '" + s + "'");
  try {
    const int w = std::stoi(s.substr(0, x));
    const int h = std::stoi(s.substr(x + 1));
    if (w < 1 || h < 1) throw std::invalid_argument(s);
    return {w, h};
  } catch (const std::exception&) {
    throw UsageError("--size expects WxH with positive integers, got '" + s + "'");
  }
}

int dispatch(CLI::App& app, int argc, char** argv) {
  // ---- synth ----
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  long sy_seed = 1;
  int sy_blobs = 6, sy_frames = 20;
  std::string sy_size = "64x64", sy_motion = "linear", sy_out;
  double sy_noise = 0.02, sy_prior_scale = 1.0, sy_prior_shift = 0.0;
  synth->add_option("--seed", sy_seed, "generator seed");
  synth->add_option("--blobs", sy_blobs, "number of Gaussian blobs");
  synth->add_option("--frames", sy_frames, "frame count");
  synth->add_option("--size", sy_size, "image size WxH");
  synth->add_option("--motion", sy_motion, "static|linear|orbit");
  synth->add_option("--noise", sy_noise, "depth prior noise sigma");
  synth->add_option("--prior-scale", sy_prior_scale, "prior depth scale a");
  synth->add_option("--prior-shift", sy_prior_shift, "prior depth shift b");
  synth->add_option("--out", sy_out, "output directory")->required();

  // ---- train ----
  auto* train = app.add_subcommand("train", "fit a field to a dataset");
  std::string tr_data, tr_out, tr_config;
  std::vector<std::string> tr_set;
  long tr_iters = -1, tr_seed = -1;
  int tr_stride = -1, tr_budget = -1, tr_warmup = -1, tr_threads = -1;
  int tr_iters_kf = -1, tr_iters_cand = -1;
  double tr_lr = -1, tr_wmax = -1;
  bool tr_no_budget = false, tr_kf_only = false, tr_quiet = false;
  train->add_option("--data", tr_data, "dataset directory")->required();
  train->add_option("--out", tr_out, "output directory")->required();
  train->add_option("--config", tr_config, "key=value config file");
  train->add_option("--iters", tr_iters, "total optimizer steps");
  train->add_option("--stride", tr_stride, "keyframe stride w");
  train->add_option("--budget", tr_budget, "primitive budget G_max");
  train->add_flag("--no-budget", tr_no_budget, "disable the budget");
  train->add_flag("--kf-only", tr_kf_only, "skip candidate frames");
  train->add_option("--iters-kf", tr_iters_kf, "inner steps per keyframe");
  train->add_option("--iters-cand", tr_iters_cand, "inner steps per candidate");
  train->add_option("--lr", tr_lr, "learning rate");
  train->add_option("--warmup", tr_warmup, "prior warm-up iterations");
  train->add_option("--wmax", tr_wmax, "prior weight cap");
  train->add_option("--seed", tr_seed, "training seed");
  train->add_option("--threads", tr_threads, "worker threads");
  train->add_flag("--quiet", tr_quiet, "suppress per-step log");
  train->add_option("--set", tr_set, "override any config key (key=value)");

  // ---- render ----
  auto* render = app.add_subcommand("render", "render frames from a scene");
  std::string re_data, re_scene, re_out;
  bool re_all = false;
  int re_threads = 1;
  render->add_option("--data", re_data, "dataset directory")->required();
  render->add_option("--scene", re_scene, "scene file")->required();
  render->add_option("--out", re_out, "output directory")->required();
  render->add_flag("--all", re_all, "render every frame, not just held-out");
  render->add_option("--threads", re_threads, "worker threads");

  // ---- eval ----
  auto* eval = app.add_subcommand("eval", "PSNR/SSIM against dataset frames");
  std::string ev_data, ev_scene, ev_renders, ev_out;
  bool ev_all = false;
  int ev_threads = 1;
  eval->add_option("--data", ev_data, "dataset directory")->required();
  eval->add_option("--scene", ev_scene, "scene file to render");
  eval->add_option("--renders", ev_renders, "directory of rendered PPMs");
  eval->add_option("--out", ev_out, "CSV output path (default stdout)");
  eval->add_flag("--all", ev_all, "evaluate every frame");
  eval->add_option("--threads", ev_threads, "worker threads");

  // ---- bench ----
  auto* bench = app.add_subcommand("bench", "raster-only FPS benchmark");
  std::string be_scene, be_data, be_size = "64x64", be_out;
  int be_frames = 24, be_repeats = 5, be_threads = 1;
  bench->add_option("--scene", be_scene, "scene file (empty field if omitted)");
  bench->add_option("--data", be_data, "dataset directory for the camera");
  bench->add_option("--size", be_size, "image size WxH when no --data");
  bench->add_option("--frames", be_frames, "timestamps per repeat");
  bench->add_option("--repeats", be_repeats, "timed repeats");
  bench->add_option("--threads", be_threads, "worker threads");
  bench->add_option("--out", be_out, "write renders after timing");

  app.require_subcommand(1);
  app.parse(argc, argv);

  if (*synth) {
    SceneSpec spec;
    spec.seed = static_cast<uint64_t>(sy_seed);
    spec.n_blobs = sy_blobs;
    spec.frames = sy_frames;
    const auto [w, h] = parse_size(sy_size);
    spec.width = w;
    spec.height = h;
    spec.motion = motion_from_string(sy_motion);
    if (sy_noise < 0) throw UsageError("--noise must be >= 0");
    spec.depth_noise_sigma = sy_noise;
    spec.prior_scale = sy_prior_scale;
    spec.prior_shift = sy_prior_shift;
    run_synth(spec, sy_out);
    return 0;
  }

  if (*train) {
    TrainOptions opt;
    opt.data_dir = tr_data;
    opt.out_dir = tr_out;
    opt.quiet = tr_quiet;
    opt.cfg = load_train_config(tr_config, tr_set);
    // dedicated flags win over config-file and --set values
    if (tr_iters >= 0) opt.cfg.iters = tr_iters;
    if (tr_stride >= 0) opt.cfg.stride = tr_stride;
    if (tr_budget >= 0) opt.cfg.budget.g_max = tr_budget;
    if (tr_no_budget) opt.cfg.no_budget = true;
    if (tr_kf_only) opt.cfg.kf_only = true;
    if (tr_iters_kf >= 0) opt.cfg.iters_kf = tr_iters_kf;
    if (tr_iters_cand >= 0) opt.cfg.iters_cand = tr_iters_cand;
    if (tr_lr >= 0) opt.cfg.lr = tr_lr;
    if (tr_warmup >= 0) opt.cfg.sched.t_warm = tr_warmup;
    if (tr_wmax >= 0) opt.cfg.sched.w_max = tr_wmax;
    if (tr_seed >= 0) opt.cfg.seed = static_cast<uint64_t>(tr_seed);
    if (tr_threads >= 0) opt.cfg.threads = tr_threads;
    validate(opt.cfg);
    run_train(opt);
    return 0;
  }

  if (*render) {
    RenderOptions opt;
    opt.data_dir = re_data;
    opt.scene_path = re_scene;
    opt.out_dir = re_out;
    opt.holdout_only = !re_all;
    opt.threads = re_threads;
    run_render(opt);
    return 0;
  }

  if (*eval) {
    EvalOptions opt;
    opt.data_dir = ev_data;
    opt.scene_path = ev_scene;
    opt.renders_dir = ev_renders;
    opt.out_csv = ev_out;
    opt.holdout_only = !ev_all;
    opt.threads = ev_threads;
    run_eval(opt);
    return 0;
  }

  if (*bench) {
    BenchOptions opt;
    opt.scene_path = be_scene;
    opt.data_dir = be_data;
    const auto [w, h] = parse_size(be_size);
    opt.width = w;
    opt.height = h;
    opt.frames = be_frames;
    opt.repeats = be_repeats;
    opt.threads = be_threads;
    opt.out_dir = be_out;
    const BenchResult res = run_bench(opt);
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "fps_mean=%.3f fps_std=%.3f frames=%ld io_ops_timed=%ld\n",
                  res.fps_mean, res.fps_std, res.frames, res.io_ops_during);
    std::cout << buf;
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"time-embedded Gaussian splatting pipeline"};
  app.set_version_flag("--version",
                       std::string("g2t ") + g2t::kVersion + " (scene format " +
                           g2t::kSceneFormat + ", optimizer sidecar " +
                           g2t::kAdamFormat + ")");
  try {
    return dispatch(app, argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    // CLI11 returns 0 for --help/--version; anything else is a usage error.
    return code == 0 ? 0 : 2;
  } catch (const g2t::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const g2t::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const g2t::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
