#pragma once

#include "blendfuse/crossval.hpp"
#include "blendfuse/postprocess.hpp"

#include <json.hpp>

#include <span>
#include <string>

namespace blendfuse::cli {

// Static SVG heat map of a score surface (alpha down, beta across), with the
// argmax cell outlined.
std::string surface_svg(const ThresholdSurface& surface, const std::string& title);

// Element-wise mean of per-fold surfaces on identical grids.
ThresholdSurface mean_surface(std::span<const ThresholdSurface> per_fold);

// One bar per fold: the fold's optimal beta.
std::string beta_bars_svg(std::span<const ThresholdSurface> per_fold, const std::string& title);

// Selected pair, per-fold argmax pairs and the beta spread.
nlohmann::json threshold_report(std::span<const ThresholdSurface> per_fold, ThresholdStrategy strategy,
                                ThresholdPair selected);

nlohmann::json results_json(const CrossValidationResult& cv);

// |0.5 (acc_p + acc_s) - score| <= tol, with slack for decimal round-off.
bool score_identity_holds(double acc_p, double acc_s, double score, double tol);

} // namespace blendfuse::cli
