#pragma once

#include <map>
#include <string>
#include <vector>

#include "g2t/camera.hpp"
#include "g2t/gaussian.hpp"
#include "g2t/losses.hpp"
#include "g2t/types.hpp"

namespace g2t {

// ASCII scene snapshot: header "g2t-scene v1 <count> <sh_degree>", one
// primitive per line with 17 significant digits, '#' comments allowed.
void write_scene(const std::string& path, const GaussianField& field);
GaussianField read_scene(const std::string& path);

// One line per frame: fx fy cx cy then the 3x4 [R|t] world_from_camera pose,
// row-major. Image size travels separately (spec.txt).
void write_cameras(const std::string& path, const std::vector<Camera>& cams);
std::vector<Camera> read_cameras(const std::string& path, int width, int height);

using KeyValues = std::map<std::string, std::string>;
void write_key_values(const std::string& path, const KeyValues& kv);
KeyValues read_key_values(const std::string& path);

// On-disk dataset: frames/%05d.ppm, depth_star/%05d.pfm, conf/%05d.pfm,
// mask/%05d.pfm, cameras.txt, spec.txt. The generator also drops
// depth_true/%05d.pfm so evaluation can score depth without the priors.
struct Dataset {
  std::vector<Image> frames;
  std::vector<PriorFrame> priors;
  std::vector<Image> depth_true;  // may be empty for foreign datasets
  std::vector<Camera> cameras;
  KeyValues spec;

  int frame_count() const { return static_cast<int>(frames.size()); }
};

void write_dataset(const std::string& dir, const Dataset& ds);
Dataset read_dataset(const std::string& dir);

std::string frame_name(int index);  // 1-based -> "00001"

}  // namespace g2t
