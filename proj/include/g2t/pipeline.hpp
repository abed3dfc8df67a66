#pragma once

#include <string>
#include <vector>

#include "g2t/rasterizer.hpp"
#include "g2t/streaming.hpp"
#include "g2t/synth.hpp"

namespace g2t {

// Command bodies shared by the CLI and in-process tests. They throw
// Usage/Data/NumericalError; the CLI maps those to exit codes.

void run_synth(const SceneSpec& spec, const std::string& out_dir);

struct TrainOptions {
  std::string data_dir;
  std::string out_dir;  // empty: keep results in memory only
  TrainConfig cfg;
  bool quiet = false;  // suppress the per-step stdout log
};
TrainResult run_train(const TrainOptions& opt);

struct RenderOptions {
  std::string data_dir;
  std::string scene_path;
  std::string out_dir;
  bool holdout_only = true;
  int threads = 1;
};
void run_render(const RenderOptions& opt);

struct EvalRow {
  std::string frame;
  double psnr = 0;
  double ssim = 0;
};
struct EvalOptions {
  std::string data_dir;
  std::string scene_path;   // render in-process when set
  std::string renders_dir;  // or compare existing images
  std::string out_csv;      // empty: stdout only
  bool holdout_only = true;
  int threads = 1;
};
std::vector<EvalRow> run_eval(const EvalOptions& opt);

struct BenchOptions {
  std::string scene_path;
  std::string data_dir;  // camera source; synth-default camera when empty
  int width = 64;
  int height = 64;
  int frames = 24;
  int repeats = 5;
  int threads = 1;
  std::string out_dir;  // optional render dump, written after timing
};
BenchResult run_bench(const BenchOptions& opt);

// Frames (1-based) held out of training; every `holdout`-th frame.
bool is_held_out(int frame, int holdout);

}  // namespace g2t
