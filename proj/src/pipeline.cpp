#include "g2t/pipeline.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "g2t/image_io.hpp"
#include "g2t/metrics.hpp"

namespace g2t {

namespace {

namespace fs = std::filesystem;

void write_loss_csv(const std::string& path, const std::vector<StepInfo>& log) {
  std::ofstream f(path);
  if (!f) throw DataError(path + ": cannot open for writing");
  f << "step,photo,silog,grad,entropy,velocity,w_si,w_grad,valid_fraction,"
       "priors_active,total\n";
  char buf[512];
  for (const StepInfo& s : log) {
    const LossReport& r = s.report;
    std::snprintf(buf, sizeof(buf),
                  "%ld,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%d,%.9g\n",
                  s.step, r.photo, r.silog, r.grad, r.entropy, r.velocity,
                  r.w_si, r.w_grad, r.valid_fraction, r.priors_active ? 1 : 0,
                  r.total);
    f << buf;
  }
  io_op_note();
}

std::vector<int> frame_selection(int total, bool holdout_only, int holdout) {
  std::vector<int> out;
  for (int f = 1; f <= total; ++f)
    if (!holdout_only || is_held_out(f, holdout)) out.push_back(f);
  if (out.empty())  // no held-out frame in range: fall back to everything
    for (int f = 1; f <= total; ++f) out.push_back(f);
  return out;
}

}  // namespace

bool is_held_out(int frame, int holdout) {
  return holdout > 0 && frame % holdout == 0;
}

void run_synth(const SceneSpec& spec, const std::string& out_dir) {
  if (out_dir.empty()) throw UsageError("synth needs an output directory");
  SynthResult result = generate_scene(spec);
  write_dataset(out_dir, result.dataset);
  write_scene((fs::path(out_dir) / "gt.scene").string(), result.gt_field);
}

TrainResult run_train(const TrainOptions& opt) {
  if (opt.data_dir.empty()) throw UsageError("train needs --data");
  const Dataset ds = read_dataset(opt.data_dir);
  const GaussianField init = init_field(ds, opt.cfg);

  if (!opt.out_dir.empty()) fs::create_directories(opt.out_dir);

  StepCallback on_step;
  if (!opt.quiet) {
    on_step = [](const StepInfo& s) {
      char buf[256];
      std::snprintf(buf, sizeof(buf),
                    "step=%ld frame=%d kf=%d count=%d total=%.6g photo=%.6g "
                    "w_si=%.4g valid=%.3g\n",
                    s.step, s.frame, s.keyframe ? 1 : 0, s.count,
                    s.report.total, s.report.photo, s.report.w_si,
                    s.report.valid_fraction);
      std::cout << buf;
    };
  }

  TrainResult result = train_sequence(ds, init, opt.cfg, on_step);

  if (!opt.out_dir.empty()) {
    write_loss_csv((fs::path(opt.out_dir) / "train_log.csv").string(),
                   result.log);
    write_scene((fs::path(opt.out_dir) / "final.scene").string(), result.field);
    write_adam((fs::path(opt.out_dir) / "final.adam").string(), result.adam);
  }
  return result;
}

void run_render(const RenderOptions& opt) {
  if (opt.data_dir.empty()) throw UsageError("render needs --data");
  if (opt.scene_path.empty()) throw UsageError("render needs --scene");
  if (opt.out_dir.empty()) throw UsageError("render needs --out");
  const Dataset ds = read_dataset(opt.data_dir);
  const GaussianField field = read_scene(opt.scene_path);
  fs::create_directories(opt.out_dir);

  std::unique_ptr<ThreadPool> pool;
  if (opt.threads > 1) pool = std::make_unique<ThreadPool>(opt.threads);
  const RenderConfig rcfg;
  TrainConfig defaults;
  for (int f : frame_selection(ds.frame_count(), opt.holdout_only,
                               defaults.holdout)) {
    const double t = frame_time(f, ds.frame_count());
    const RenderOutput ro =
        rasterize(field, ds.cameras[f - 1], t, rcfg, pool.get());
    const std::string name = frame_name(f);
    write_ppm((fs::path(opt.out_dir) / (name + ".ppm")).string(), ro.rgb);
    write_pfm((fs::path(opt.out_dir) / (name + "_depth.pfm")).string(),
              ro.depth);
  }
}

std::vector<EvalRow> run_eval(const EvalOptions& opt) {
  if (opt.data_dir.empty()) throw UsageError("eval needs --data");
  if (opt.scene_path.empty() == opt.renders_dir.empty())
    throw UsageError("eval needs exactly one of --scene or --renders");
  const Dataset ds = read_dataset(opt.data_dir);

  GaussianField field;
  std::unique_ptr<ThreadPool> pool;
  if (!opt.scene_path.empty()) {
    field = read_scene(opt.scene_path);
    if (opt.threads > 1) pool = std::make_unique<ThreadPool>(opt.threads);
  }

  std::vector<EvalRow> rows;
  const RenderConfig rcfg;
  TrainConfig defaults;
  double sum_psnr = 0, sum_ssim = 0;
  const std::vector<int> frames = frame_selection(
      ds.frame_count(), opt.holdout_only, defaults.holdout);
  for (int f : frames) {
    Image rendered;
    if (!opt.scene_path.empty()) {
      const double t = frame_time(f, ds.frame_count());
      rendered = rasterize(field, ds.cameras[f - 1], t, rcfg, pool.get()).rgb;
    } else {
      rendered = read_ppm(
          (fs::path(opt.renders_dir) / (frame_name(f) + ".ppm")).string());
    }
    EvalRow row;
    row.frame = frame_name(f);
    row.psnr = psnr(ds.frames[f - 1], rendered);
    row.ssim = ssim(ds.frames[f - 1], rendered);
    sum_psnr += row.psnr;
    sum_ssim += row.ssim;
    rows.push_back(row);
  }
  EvalRow mean;
  mean.frame = "mean";
  mean.psnr = rows.empty() ? 0 : sum_psnr / rows.size();
  mean.ssim = rows.empty() ? 0 : sum_ssim / rows.size();
  rows.push_back(mean);

  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!opt.out_csv.empty()) {
    file.open(opt.out_csv);
    if (!file) throw DataError(opt.out_csv + ": cannot open for writing");
    io_op_note();
    os = &file;
  }
  *os << "frame,psnr,ssim\n";
  char buf[128];
  for (const EvalRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%.6f,%.9f\n", r.frame.c_str(), r.psnr,
                  r.ssim);
    *os << buf;
  }
  return rows;
}

BenchResult run_bench(const BenchOptions& opt) {
  if (opt.repeats < 1) throw UsageError("bench repeats must be >= 1");
  if (opt.frames < 1) throw UsageError("bench needs at least one frame");

  GaussianField field;
  if (!opt.scene_path.empty()) field = read_scene(opt.scene_path);

  Camera cam;
  if (!opt.data_dir.empty()) {
    const Dataset ds = read_dataset(opt.data_dir);
    if (ds.cameras.empty()) throw DataError("bench: dataset has no cameras");
    cam = ds.cameras[0];
  } else {
    cam.width = opt.width;
    cam.height = opt.height;
    cam.fx = cam.fy = 1.1 * opt.width;
    cam.cx = (opt.width - 1) / 2.0;
    cam.cy = (opt.height - 1) / 2.0;
  }

  std::vector<double> times(opt.frames);
  for (int i = 0; i < opt.frames; ++i)
    times[i] = opt.frames > 1 ? static_cast<double>(i) / (opt.frames - 1) : 0.0;

  std::unique_ptr<ThreadPool> pool;
  if (opt.threads > 1) pool = std::make_unique<ThreadPool>(opt.threads);
  const RenderConfig rcfg;
  const BenchResult res =
      bench_raster(field, cam, times, opt.repeats, rcfg, pool.get());

  // Optional artifact dump, deliberately outside the timed region.
  if (!opt.out_dir.empty()) {
    fs::create_directories(opt.out_dir);
    for (int i = 0; i < opt.frames; ++i) {
      const RenderOutput ro = rasterize(field, cam, times[i], rcfg, pool.get());
      write_ppm((fs::path(opt.out_dir) / (frame_name(i + 1) + ".ppm")).string(),
                ro.rgb);
    }
  }
  return res;
}

}  // namespace g2t
