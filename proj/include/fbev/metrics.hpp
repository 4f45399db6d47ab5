#pragma once

#include "fbev/types.hpp"

#include <array>
#include <map>

namespace fbev {

struct EvalReport {
    std::map<SemClass, double> iou_per_class;
    double iou_occlusion = 0.0;
    double miou = 0.0;
    double visible_cell_fraction = 0.0;
};

/// |pred AND gt| / |pred OR gt|; 1.0 when both masks are empty.
double iou(const GridB& pred, const GridB& gt);

/// Cells at least 50% visible (boundary inclusive).
GridB visibility_filter(const Grid& gt_visibility);

/// Mean of the five reported scores: occlusion, vehicles, markings, street,
/// background. The invalid class never enters the average.
double miou_from_scores(double occlusion, double vehicles, double markings, double street,
                        double background);

/// Per-class IoU over >=50%-visible cells for the four semantic classes;
/// occlusion IoU from 0.5-binarized occupancy grids over all cells.
EvalReport evaluate(const GridI& pred_class, const Grid& pred_visibility, const GridI& gt_class,
                    const Grid& gt_visibility);

}  // namespace fbev
