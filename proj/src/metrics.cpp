#include "fbev/metrics.hpp"

namespace fbev {

double iou(const GridB& pred, const GridB& gt) {
    if (pred.rows() != gt.rows() || pred.cols() != gt.cols())
        throw ShapeError("iou: mask shape mismatch");
    const auto inter = (pred && gt).count();
    const auto uni = (pred || gt).count();
    if (uni == 0) return 1.0;  // class absent and not predicted
    return static_cast<double>(inter) / static_cast<double>(uni);
}

GridB visibility_filter(const Grid& gt_visibility) {
    if ((gt_visibility.array() < 0.0).any() || (gt_visibility.array() > 1.0).any())
        throw DomainError("visibility_filter: entries outside [0, 1]");
    return gt_visibility.array() >= 0.5;
}

double miou_from_scores(double occlusion, double vehicles, double markings, double street,
                        double background) {
    return (occlusion + vehicles + markings + street + background) / 5.0;
}

EvalReport evaluate(const GridI& pred_class, const Grid& pred_visibility, const GridI& gt_class,
                    const Grid& gt_visibility) {
    if (pred_class.rows() != gt_class.rows() || pred_class.cols() != gt_class.cols() ||
        pred_visibility.rows() != gt_class.rows() || gt_visibility.rows() != gt_class.rows() ||
        pred_visibility.cols() != gt_class.cols() || gt_visibility.cols() != gt_class.cols())
        throw ShapeError("evaluate: grid shape mismatch");
    if ((pred_class.array() < 0).any() || (pred_class.array() >= kNumClasses).any() ||
        (gt_class.array() < 0).any() || (gt_class.array() >= kNumClasses).any())
        throw DataError("evaluate: unknown class id");

    const GridB visible = visibility_filter(gt_visibility);

    EvalReport rep;
    rep.visible_cell_fraction =
        static_cast<double>(visible.count()) / static_cast<double>(visible.size());

    for (SemClass cls : {SemClass::Vehicles, SemClass::Markings, SemClass::Street,
                         SemClass::Background}) {
        const int id = static_cast<int>(cls);
        const GridB pred = (pred_class.array() == id) && visible;
        const GridB gt = (gt_class.array() == id) && visible;
        rep.iou_per_class[cls] = iou(pred, gt);
    }

    // Occlusion IoU over all cells; the visibility filter derives from the
    // same ground truth it would mask.
    rep.iou_occlusion = iou(pred_visibility.array() >= 0.5, gt_visibility.array() >= 0.5);

    rep.miou = miou_from_scores(rep.iou_occlusion, rep.iou_per_class[SemClass::Vehicles],
                                rep.iou_per_class[SemClass::Markings],
                                rep.iou_per_class[SemClass::Street],
                                rep.iou_per_class[SemClass::Background]);
    return rep;
}

}  // namespace fbev
