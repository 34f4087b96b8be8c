#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "canopy/crowns.hpp"
#include "canopy/errors.hpp"
#include "canopy/hungarian.hpp"

namespace canopy {

enum class CrownClass { dominant, codominant, intermediate, overtopped };
enum class CrownGroup { overstory, understory };

inline CrownGroup group_of(CrownClass c) {
    return (c == CrownClass::dominant || c == CrownClass::codominant)
               ? CrownGroup::overstory
               : CrownGroup::understory;
}

inline const char* to_string(CrownClass c) {
    switch (c) {
        case CrownClass::dominant: return "dominant";
        case CrownClass::codominant: return "codominant";
        case CrownClass::intermediate: return "intermediate";
        case CrownClass::overtopped: return "overtopped";
    }
    return "?";
}

inline std::optional<CrownClass> crown_class_from_string(const std::string& s) {
    if (s == "dominant") return CrownClass::dominant;
    if (s == "codominant" || s == "co-dominant") return CrownClass::codominant;
    if (s == "intermediate") return CrownClass::intermediate;
    if (s == "overtopped") return CrownClass::overtopped;
    return std::nullopt;
}

// One field-surveyed stem.
struct StemRecord {
    std::string plot_id;
    double x = 0.0;
    double y = 0.0;
    double height_m = 0.0;
    CrownClass crown_class = CrownClass::codominant;
    bool live = true;
};

// Circular survey plot; the default radius is the 0.04 ha plot
// (sqrt(400/pi) ~ 11.2838 m) and crowns in the 4.7 m buffer ring are
// match-eligible but never counted as commissions.
struct PlotSpec {
    double center_x = 0.0;
    double center_y = 0.0;
    double radius_m = default_radius();
    double buffer_m = 4.7;

    static double default_radius() { return std::sqrt(400.0 / std::numbers::pi); }
};

// Pair score from height agreement and lean: a pair is eligible when the
// relative height difference is under height_tol and the apex leans less
// than lean_tol_deg from the vertical through the stem; both terms fall
// linearly to zero at their eligibility boundary.
inline std::optional<double> pair_score(double apex_x, double apex_y, double apex_z,
                                        const StemRecord& stem,
                                        double height_tol = 0.30,
                                        double lean_tol_deg = 15.0) {
    if (!(stem.height_m > 0.0))
        throw InvalidInputError("pair_score: stem height must be positive");
    if (!(apex_z > 0.0)) return std::nullopt;
    const double rel_dh = std::abs(apex_z - stem.height_m) / stem.height_m;
    const double horiz = std::hypot(apex_x - stem.x, apex_y - stem.y);
    const double lean_deg = std::atan(horiz / apex_z) * 180.0 / std::numbers::pi;
    if (rel_dh >= height_tol || lean_deg >= lean_tol_deg) return std::nullopt;
    return (1.0 - rel_dh / height_tol) + (1.0 - lean_deg / lean_tol_deg);
}

struct MatchedPair {
    int crown_id = 0;
    std::size_t stem_index = 0;
    double score = 0.0;
};

struct GroupMetrics {
    int mt = 0;
    int oe = 0;
    int ce = 0;
    double re = 0.0;
    double pr = 0.0;
    double f = 0.0;
};

// Recall = MT/(MT+OE), precision = MT/(MT+CE), F = harmonic mean; all three
// defined as 0 when their denominator vanishes.
inline void fill_metrics(GroupMetrics& g) {
    g.re = (g.mt + g.oe) > 0 ? static_cast<double>(g.mt) / (g.mt + g.oe) : 0.0;
    g.pr = (g.mt + g.ce) > 0 ? static_cast<double>(g.mt) / (g.mt + g.ce) : 0.0;
    g.f = (g.re + g.pr) > 0 ? 2.0 * g.re * g.pr / (g.re + g.pr) : 0.0;
}

struct MatchReport {
    std::string plot_id;
    std::vector<MatchedPair> pairs;
    GroupMetrics overall;
    GroupMetrics overstory;
    GroupMetrics understory;
    // Group attribution of commission errors follows the nearest stem's
    // group; that is a reporting convention, not a field measurement.
    bool group_ce_by_nearest_stem = true;
};

// Match crowns against a stem map. Candidate crowns are those with apex
// inside radius + buffer; unmatched candidates inside the core radius are
// commission errors while unmatched buffer-ring crowns count as nothing.
inline MatchReport evaluate_plot(const std::vector<Crown>& crowns,
                                 const std::vector<StemRecord>& stems,
                                 const PlotSpec& plot,
                                 double height_tol = 0.30,
                                 double lean_tol_deg = 15.0) {
    MatchReport report;
    if (!stems.empty()) report.plot_id = stems.front().plot_id;

    for (const StemRecord& s : stems) {
        if (!(s.height_m > 0.0))
            throw InvalidInputError("evaluate_plot: stem height must be positive");
        const double d = std::hypot(s.x - plot.center_x, s.y - plot.center_y);
        if (d > plot.radius_m + 1e-9)
            throw InvalidInputError("evaluate_plot: stem outside the plot radius");
    }

    std::vector<std::size_t> candidates;
    std::vector<bool> in_core;
    for (std::size_t i = 0; i < crowns.size(); ++i) {
        const double d = std::hypot(crowns[i].apex_x - plot.center_x,
                                    crowns[i].apex_y - plot.center_y);
        if (d <= plot.radius_m + plot.buffer_m) {
            candidates.push_back(i);
            in_core.push_back(d <= plot.radius_m);
        }
    }

    ScoreMatrix scores(stems.size(),
                       std::vector<std::optional<double>>(candidates.size()));
    for (std::size_t si = 0; si < stems.size(); ++si)
        for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
            const Crown& crown = crowns[candidates[ci]];
            scores[si][ci] = pair_score(crown.apex_x, crown.apex_y, crown.apex_z,
                                        stems[si], height_tol, lean_tol_deg);
        }

    const Assignment assignment = hungarian_max(scores);

    std::vector<bool> stem_matched(stems.size(), false);
    std::vector<bool> crown_matched(candidates.size(), false);
    for (const auto& [si, ci] : assignment.pairs) {
        stem_matched[si] = true;
        crown_matched[ci] = true;
        MatchedPair pair;
        pair.crown_id = crowns[candidates[ci]].id;
        pair.stem_index = static_cast<std::size_t>(si);
        pair.score = *scores[si][ci];
        report.pairs.push_back(pair);
        ++report.overall.mt;
        GroupMetrics& g = group_of(stems[si].crown_class) == CrownGroup::overstory
                              ? report.overstory
                              : report.understory;
        ++g.mt;
    }

    for (std::size_t si = 0; si < stems.size(); ++si) {
        if (stem_matched[si]) continue;
        ++report.overall.oe;
        GroupMetrics& g = group_of(stems[si].crown_class) == CrownGroup::overstory
                              ? report.overstory
                              : report.understory;
        ++g.oe;
    }

    for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
        if (crown_matched[ci] || !in_core[ci]) continue;
        ++report.overall.ce;
        if (stems.empty()) continue; // no stems: group attribution undefined
        const Crown& crown = crowns[candidates[ci]];
        std::size_t nearest = 0;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t si = 0; si < stems.size(); ++si) {
            const double d = std::hypot(crown.apex_x - stems[si].x,
                                        crown.apex_y - stems[si].y);
            if (d < best) {
                best = d;
                nearest = si;
            }
        }
        GroupMetrics& g = group_of(stems[nearest].crown_class) == CrownGroup::overstory
                              ? report.overstory
                              : report.understory;
        ++g.ce;
    }

    fill_metrics(report.overall);
    fill_metrics(report.overstory);
    fill_metrics(report.understory);
    return report;
}

// Per-metric unweighted mean across plots. A plot contributes to a metric
// only when that metric's denominator is non-zero there, and the samples
// column records how many plots qualified.
struct MetricMean {
    double mean = 0.0;
    int samples = 0;
};

struct GroupAggregate {
    MetricMean re, pr, f;
};

struct AggregateSummary {
    GroupAggregate overall, overstory, understory;
};

namespace detail {

inline bool metric_defined(const GroupMetrics& g, int which) {
    switch (which) {
        case 0: return g.mt + g.oe > 0;          // recall
        case 1: return g.mt + g.ce > 0;          // precision
        default: return g.re + g.pr > 0;         // f-score
    }
}

inline double metric_value(const GroupMetrics& g, int which) {
    switch (which) {
        case 0: return g.re;
        case 1: return g.pr;
        default: return g.f;
    }
}

inline MetricMean mean_metric(const std::vector<MatchReport>& reports,
                              const GroupMetrics MatchReport::* group, int which) {
    MetricMean m;
    double acc = 0.0;
    for (const MatchReport& r : reports) {
        const GroupMetrics& g = r.*group;
        if (!metric_defined(g, which)) continue;
        acc += metric_value(g, which);
        ++m.samples;
    }
    if (m.samples > 0) m.mean = acc / m.samples;
    return m;
}

} // namespace detail

inline AggregateSummary aggregate_reports(const std::vector<MatchReport>& reports) {
    if (reports.empty())
        throw InvalidInputError("aggregate_reports: no reports");
    AggregateSummary s;
    const std::pair<GroupAggregate AggregateSummary::*, GroupMetrics MatchReport::*>
        groups[] = {{&AggregateSummary::overall, &MatchReport::overall},
                    {&AggregateSummary::overstory, &MatchReport::overstory},
                    {&AggregateSummary::understory, &MatchReport::understory}};
    for (const auto& [agg, grp] : groups) {
        (s.*agg).re = detail::mean_metric(reports, grp, 0);
        (s.*agg).pr = detail::mean_metric(reports, grp, 1);
        (s.*agg).f = detail::mean_metric(reports, grp, 2);
    }
    return s;
}

// Paired per-plot comparison of two pipeline modes. Deltas are
// (b - a) in percentage points over plots where the metric is defined in
// both modes; mse is the mean squared deviation of the deltas about their
// mean.
struct ComparisonRow {
    std::string group;
    std::string metric;
    int samples = 0;
    double mean_a = 0.0;
    double mean_b = 0.0;
    double mean_delta_pp = 0.0;
    double mse = 0.0;
};

inline std::vector<ComparisonRow> compare_reports(const std::vector<MatchReport>& a,
                                                  const std::vector<MatchReport>& b) {
    if (a.empty() || b.empty())
        throw InvalidInputError("compare_reports: no reports");
    if (a.size() != b.size())
        throw InvalidInputError("compare_reports: report lists differ in length");

    std::vector<ComparisonRow> rows;
    const std::pair<const char*, GroupMetrics MatchReport::*> groups[] = {
        {"over-story", &MatchReport::overstory},
        {"under-story", &MatchReport::understory},
        {"all", &MatchReport::overall}};
    const char* metric_names[] = {"Re", "Pr", "F"};

    for (const auto& [gname, grp] : groups) {
        for (int which = 0; which < 3; ++which) {
            ComparisonRow row;
            row.group = gname;
            row.metric = metric_names[which];
            std::vector<double> deltas;
            double acc_a = 0.0, acc_b = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) {
                const GroupMetrics& ga = a[i].*grp;
                const GroupMetrics& gb = b[i].*grp;
                if (!detail::metric_defined(ga, which) ||
                    !detail::metric_defined(gb, which))
                    continue;
                const double va = detail::metric_value(ga, which);
                const double vb = detail::metric_value(gb, which);
                acc_a += va;
                acc_b += vb;
                deltas.push_back((vb - va) * 100.0);
            }
            row.samples = static_cast<int>(deltas.size());
            if (!deltas.empty()) {
                row.mean_a = acc_a / deltas.size();
                row.mean_b = acc_b / deltas.size();
                double mean_d = 0.0;
                for (double d : deltas) mean_d += d;
                mean_d /= deltas.size();
                row.mean_delta_pp = mean_d;
                double acc_sq = 0.0;
                for (double d : deltas) acc_sq += (d - mean_d) * (d - mean_d);
                row.mse = acc_sq / deltas.size();
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

} // namespace canopy
