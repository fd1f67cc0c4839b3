#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "oneshot/errors.hpp"

namespace oneshot {

/// Labels identifying one evaluation cell (one equation/backend/stencil/
/// resolution/sigma combination).
struct SummaryLabels {
    std::string equation;
    std::string backend;   // fpi | loinn | cloinn
    std::string stencil;
    int resolution = 0;    // coarse spatial node count
    double sigma = 0.0;
    std::uint64_t seed_lo = 0;
    std::uint64_t seed_hi = 0;
};

/// Statistics over the per-forcing relative errors of one cell. Forcings whose
/// prediction diverged or failed are excluded from the statistics and counted
/// in n_failed; a cell with no completed forcings has count == 0.
struct ErrorSummary {
    SummaryLabels labels;
    std::vector<double> errors;
    std::size_t count = 0;
    std::size_t n_failed = 0;
    double mean = 0.0;
    double stddev = 0.0;   // population standard deviation
    double geomean = 0.0;  // defined only when all errors are positive

    bool all_failed() const { return count == 0; }
};

/// Errors must be nonnegative; an all-failed cell is represented by an empty
/// error list with n_failed > 0. Asserts geomean <= mean (AM-GM).
ErrorSummary summarize(std::vector<double> errors, const SummaryLabels& labels,
                       std::size_t n_failed = 0);

/// One row per summary, stable input order. Schema:
/// equation,backend,stencil,resolution,sigma,count,mean_pct,std_pct,geomean_pct,seed_lo,seed_hi,n_failed
std::string emit_table_csv(const std::vector<ErrorSummary>& summaries);

/// Pivot: one row per sigma, one column per backend/stencil pair; all-failed
/// cells render as "-".
std::string emit_table_markdown(const std::vector<ErrorSummary>& summaries);

/// Static SVG line chart of mean error (%) against the chosen x value, one
/// polyline per backend/stencil series.
struct CurvePoint {
    double x = 0.0;     // resolution or sigma
    double mean = 0.0;  // fraction, plotted as percent
};
struct Curve {
    std::string name;
    std::vector<CurvePoint> points;
};
std::string emit_curves_svg(const std::vector<Curve>& curves, const std::string& x_label,
                            const std::string& title);

/// Groups summaries into per-backend/stencil curves keyed on resolution
/// (sweep=true) or sigma (sweep=false); skips all-failed cells.
std::vector<Curve> curves_from_summaries(const std::vector<ErrorSummary>& summaries,
                                         bool by_resolution);

}  // namespace oneshot
