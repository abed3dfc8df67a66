#pragma once

#include <Eigen/Dense>

#include "g2t/types.hpp"

namespace g2t {

// Pinhole camera. Pixel (ix, iy) samples the image plane at exactly (ix, iy),
// so a point projecting to (cx, cy) lands on the pixel with those indices.
struct Camera {
  double fx = 0, fy = 0, cx = 0, cy = 0;
  int width = 0, height = 0;
  Eigen::Matrix3d rot_wc = Eigen::Matrix3d::Identity();  // world_from_camera
  Eigen::Vector3d t_wc = Eigen::Vector3d::Zero();

  Eigen::Vector3d to_camera(const Eigen::Vector3d& p_world) const {
    return rot_wc.transpose() * (p_world - t_wc);
  }
  Eigen::Matrix3d cam_from_world_rot() const { return rot_wc.transpose(); }
  const Eigen::Vector3d& position() const { return t_wc; }

  void validate() const {
    if (!(fx > 0) || !(fy > 0)) throw DataError("camera focal lengths must be positive");
    if (width < 1 || height < 1) throw DataError("camera size must be at least 1x1");
  }
};

}  // namespace g2t
