#pragma once

#include "flowpatch/geometry.hpp"
#include "flowpatch/raster.hpp"

namespace flowpatch {

/// Everything known about one target frame while references are folded in.
///
/// Invariants maintained by propagation and compensation:
///   prop_mask and remaining are disjoint and together cover `hole`;
///   err_mask lies in dilated_hole - hole; dilated_hole contains hole.
struct PropagationState {
  Frame input;         // corrupted target frame as given
  Frame filled;        // hole pixels filled by propagation
  Frame overfilled;    // filled, plus propagated samples over the error band
  Mask hole;           // original hole of the target
  Mask dilated_hole;   // hole dilated once; never re-dilated
  Mask prop_mask;      // hole pixels propagated so far
  Mask remaining;      // hole pixels still unfilled
  Mask err_mask;       // band pixels sampled from the latest reference
  Mask new_writes;     // hole pixels written by the latest reference

  static PropagationState start(const Frame& frame, const Mask& hole,
                                int dilation = kDefaultDilation) {
    require_same_geometry(frame, hole, "propagation state");
    PropagationState s;
    s.input = frame;
    s.filled = frame;
    s.overfilled = frame;
    s.hole = hole;
    s.dilated_hole = dilate(hole, dilation);
    s.prop_mask = Mask(frame.width(), frame.height());
    s.remaining = hole;
    s.err_mask = Mask(frame.width(), frame.height());
    s.new_writes = Mask(frame.width(), frame.height());
    return s;
  }

  /// dilated_hole - hole.
  Mask band() const { return mask_subtract(dilated_hole, hole); }
};

}  // namespace flowpatch
