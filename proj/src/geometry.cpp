#include "zsd/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "zsd/error.hpp"

namespace zsd {

double box_area(const Box& b) { return b.w * b.h; }

double iou(const Box& a, const Box& b) {
  const double ax1 = a.x - a.w / 2.0, ax2 = a.x + a.w / 2.0;
  const double ay1 = a.y - a.h / 2.0, ay2 = a.y + a.h / 2.0;
  const double bx1 = b.x - b.w / 2.0, bx2 = b.x + b.w / 2.0;
  const double by1 = b.y - b.h / 2.0, by2 = b.y + b.h / 2.0;

  const double iw = std::min(ax2, bx2) - std::max(ax1, bx1);
  const double ih = std::min(ay2, by2) - std::max(ay1, by1);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;

  const double inter = iw * ih;
  const double uni = box_area(a) + box_area(b) - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

Offsets encode_offsets(const Box& proposal, const Box& ground_truth) {
  require(proposal.w > 0.0 && proposal.h > 0.0 && ground_truth.w > 0.0 &&
              ground_truth.h > 0.0,
          ErrorCode::invalid_argument, "encode_offsets: degenerate box");
  return {(ground_truth.x - proposal.x) / proposal.w,
          (ground_truth.y - proposal.y) / proposal.h,
          std::log(ground_truth.w / proposal.w),
          std::log(ground_truth.h / proposal.h)};
}

Box decode_offsets(const Box& proposal, const Offsets& t) {
  require(proposal.w > 0.0 && proposal.h > 0.0, ErrorCode::invalid_argument,
          "decode_offsets: degenerate proposal");
  const double tw = std::clamp(t.tw, -4.0, 4.0);
  const double th = std::clamp(t.th, -4.0, 4.0);
  return {proposal.x + t.tx * proposal.w, proposal.y + t.ty * proposal.h,
          proposal.w * std::exp(tw), proposal.h * std::exp(th)};
}

std::vector<std::size_t> nms(std::span<const ScoredBox> boxes, double iou_threshold) {
  std::vector<std::size_t> order(boxes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return boxes[a].score > boxes[b].score;
  });

  std::vector<std::size_t> kept;
  std::vector<bool> suppressed(boxes.size(), false);
  for (std::size_t idx : order) {
    if (suppressed[idx]) continue;
    kept.push_back(idx);
    for (std::size_t other : order) {
      if (suppressed[other] || other == idx) continue;
      if (iou(boxes[idx].box, boxes[other].box) > iou_threshold)
        suppressed[other] = true;
    }
  }
  return kept;
}

}  // namespace zsd
