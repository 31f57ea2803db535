#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace zsd {

/// Axis-aligned box in center-size form, continuous image coordinates.
struct Box {
  double x = 0.0;  // center x
  double y = 0.0;  // center y
  double w = 1.0;
  double h = 1.0;
};

double box_area(const Box& b);
double iou(const Box& a, const Box& b);

/// Scale-invariant center offsets and log-scale size offsets.
struct Offsets {
  double tx = 0.0;
  double ty = 0.0;
  double tw = 0.0;
  double th = 0.0;
};

/// tx = (x_gt - x_p) / w_p, ty = (y_gt - y_p) / h_p,
/// tw = log(w_gt / w_p),   th = log(h_gt / h_p).
Offsets encode_offsets(const Box& proposal, const Box& ground_truth);

/// Inverse of encode_offsets; |tw| and |th| are clamped to 4 before exp.
Box decode_offsets(const Box& proposal, const Offsets& t);

struct ScoredBox {
  Box box;
  double score = 0.0;
};

/// Greedy non-maximum suppression. Returns indices of kept boxes in
/// descending-score order; score ties keep the lower input index first.
/// A box is suppressed when its IoU with an already kept box exceeds the
/// threshold strictly.
std::vector<std::size_t> nms(std::span<const ScoredBox> boxes, double iou_threshold);

}  // namespace zsd
