#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "canopy/errors.hpp"
#include "canopy/evaluation.hpp"
#include "canopy/point_cloud.hpp"
#include "canopy/stratify.hpp"

namespace canopy {

// All report numbers print at 6 significant digits so repeated runs diff
// clean.
inline std::string fmt_g6(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

// Coordinates keep fixed decimals so a second write of a read file is
// byte-identical.
inline std::string fmt_f6(double v) {
    char buf[348];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return out;
}

inline double parse_double(const std::string& token, std::size_t line_no,
                           const char* what) {
    double v = 0.0;
    const char* begin = token.data();
    const char* end = begin + token.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc{} || ptr != end)
        throw ParseError("line " + std::to_string(line_no) + ": cannot parse " + what +
                         " from '" + token + "'");
    return v;
}

inline long parse_long(const std::string& token, std::size_t line_no, const char* what) {
    long v = 0;
    const char* begin = token.data();
    const char* end = begin + token.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc{} || ptr != end)
        throw ParseError("line " + std::to_string(line_no) + ": cannot parse " + what +
                         " from '" + token + "'");
    return v;
}

inline std::map<std::string, std::size_t> header_index(const std::string& header) {
    std::map<std::string, std::size_t> idx;
    const std::vector<std::string> names = split_csv(header);
    for (std::size_t i = 0; i < names.size(); ++i) {
        std::string lower = names[i];
        std::transform(lower.begin(), lower.end(), lower.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        idx[lower] = i;
    }
    return idx;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Point files: delimited text with a header naming x, y, z and optionally
// class (2 = ground, the usual LiDAR convention) and source_id.

inline PointCloud read_points(std::istream& in,
                              std::optional<double> area_override = std::nullopt) {
    std::string header;
    if (!std::getline(in, header))
        throw SchemaError("point file: missing header row");
    const auto idx = detail::header_index(header);
    const auto need = [&](const char* name) {
        const auto it = idx.find(name);
        if (it == idx.end())
            throw SchemaError(std::string("point file: missing required column '") +
                              name + "'");
        return it->second;
    };
    const std::size_t ix = need("x"), iy = need("y"), iz = need("z");
    const auto iclass = idx.find("class");
    const auto isource = idx.find("source_id");

    std::vector<Point> points;
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const std::vector<std::string> tok = detail::split_csv(line);
        if (tok.size() < idx.size())
            throw ParseError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(idx.size()) + " columns, got " +
                             std::to_string(tok.size()));
        Point p;
        p.x = detail::parse_double(tok[ix], line_no, "x");
        p.y = detail::parse_double(tok[iy], line_no, "y");
        p.z = detail::parse_double(tok[iz], line_no, "z");
        if (iclass != idx.end() && !tok[iclass->second].empty())
            p.ground = detail::parse_long(tok[iclass->second], line_no, "class") == 2;
        if (isource != idx.end() && !tok[isource->second].empty())
            p.source_id = static_cast<std::uint32_t>(
                detail::parse_long(tok[isource->second], line_no, "source_id"));
        points.push_back(p);
    }
    return make_cloud(std::move(points), area_override);
}

inline PointCloud read_points(const std::string& path,
                              std::optional<double> area_override = std::nullopt) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open point file: " + path);
    return read_points(in, area_override);
}

inline void write_points(const PointCloud& cloud, std::ostream& out) {
    out << "x,y,z,class,source_id\n";
    for (const Point& p : cloud.points) {
        out << fmt_f6(p.x) << ',' << fmt_f6(p.y) << ',' << fmt_f6(p.z) << ','
            << (p.ground ? 2 : 1) << ',';
        if (p.source_id) out << *p.source_id;
        out << '\n';
    }
}

inline void write_points(const PointCloud& cloud, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write point file: " + path);
    write_points(cloud, out);
}

// ---------------------------------------------------------------------------
// Stem maps: plot_id, x, y, height_m, crown_class, live_flag.

inline std::vector<StemRecord> read_stems(std::istream& in) {
    std::string header;
    if (!std::getline(in, header))
        throw SchemaError("stem file: missing header row");
    const auto idx = detail::header_index(header);
    const auto need = [&](const char* name) {
        const auto it = idx.find(name);
        if (it == idx.end())
            throw SchemaError(std::string("stem file: missing required column '") +
                              name + "'");
        return it->second;
    };
    const std::size_t ip = need("plot_id"), ix = need("x"), iy = need("y"),
                      ih = need("height_m"), ic = need("crown_class"),
                      il = need("live_flag");

    std::vector<StemRecord> stems;
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const std::vector<std::string> tok = detail::split_csv(line);
        if (tok.size() < idx.size())
            throw ParseError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(idx.size()) + " columns, got " +
                             std::to_string(tok.size()));
        StemRecord s;
        s.plot_id = tok[ip];
        s.x = detail::parse_double(tok[ix], line_no, "x");
        s.y = detail::parse_double(tok[iy], line_no, "y");
        s.height_m = detail::parse_double(tok[ih], line_no, "height_m");
        if (!(s.height_m > 0.0))
            throw InvalidInputError("line " + std::to_string(line_no) +
                                    ": stem height must be positive");
        const std::optional<CrownClass> cls = crown_class_from_string(tok[ic]);
        if (!cls)
            throw SchemaError("line " + std::to_string(line_no) +
                              ": unknown crown class '" + tok[ic] + "'");
        s.crown_class = *cls;
        s.live = detail::parse_long(tok[il], line_no, "live_flag") != 0;
        stems.push_back(std::move(s));
    }
    return stems;
}

inline std::vector<StemRecord> read_stems(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open stem file: " + path);
    return read_stems(in);
}

inline void write_stems(const std::vector<StemRecord>& stems, std::ostream& out) {
    out << "plot_id,x,y,height_m,crown_class,live_flag\n";
    for (const StemRecord& s : stems)
        out << s.plot_id << ',' << fmt_f6(s.x) << ',' << fmt_f6(s.y) << ','
            << fmt_f6(s.height_m) << ',' << to_string(s.crown_class) << ','
            << (s.live ? 1 : 0) << '\n';
}

inline void write_stems(const std::vector<StemRecord>& stems, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write stem file: " + path);
    write_stems(stems, out);
}

// ---------------------------------------------------------------------------
// Reports.

inline void write_layer_stats(const std::vector<CanopyLayer>& layers, std::ostream& out) {
    out << "layer_index,starting_height_m,thickness_m,density_pt_m2,point_count,"
           "ground_vegetation_flag\n";
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const CanopyLayer& layer = layers[i];
        out << (i + 1) << ',' << fmt_g6(layer.summary.starting_height_m) << ','
            << fmt_g6(layer.summary.thickness_m) << ','
            << fmt_g6(layer.summary.density_pt_m2) << ',' << layer.points.size() << ','
            << (layer.ground_vegetation ? 1 : 0) << '\n';
    }
}

inline void write_crowns(const std::vector<Crown>& crowns, std::ostream& out) {
    out << "crown_id,layer_index,apex_x,apex_y,apex_z,avg_width_m,footprint_area_m2,"
           "point_count\n";
    std::vector<const Crown*> sorted;
    sorted.reserve(crowns.size());
    for (const Crown& c : crowns) sorted.push_back(&c);
    std::sort(sorted.begin(), sorted.end(),
              [](const Crown* a, const Crown* b) { return a->id < b->id; });
    for (const Crown* c : sorted)
        out << c->id << ',' << c->layer_index << ',' << fmt_f6(c->apex_x) << ','
            << fmt_f6(c->apex_y) << ',' << fmt_f6(c->apex_z) << ','
            << fmt_g6(c->avg_width_m) << ',' << fmt_g6(c->footprint_area_m2) << ','
            << c->member_point_ids.size() << '\n';
}

inline std::vector<Crown> read_crowns(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open crown file: " + path);
    std::string header;
    if (!std::getline(in, header))
        throw SchemaError("crown file: missing header row");
    const auto idx = detail::header_index(header);
    const auto need = [&](const char* name) {
        const auto it = idx.find(name);
        if (it == idx.end())
            throw SchemaError(std::string("crown file: missing required column '") +
                              name + "'");
        return it->second;
    };
    const std::size_t ii = need("crown_id"), il = need("layer_index"),
                      ix = need("apex_x"), iy = need("apex_y"), iz = need("apex_z"),
                      iw = need("avg_width_m"), ia = need("footprint_area_m2");

    std::vector<Crown> crowns;
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const std::vector<std::string> tok = detail::split_csv(line);
        if (tok.size() < idx.size())
            throw ParseError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(idx.size()) + " columns, got " +
                             std::to_string(tok.size()));
        Crown c;
        c.id = static_cast<int>(detail::parse_long(tok[ii], line_no, "crown_id"));
        c.layer_index =
            static_cast<int>(detail::parse_long(tok[il], line_no, "layer_index"));
        c.apex_x = detail::parse_double(tok[ix], line_no, "apex_x");
        c.apex_y = detail::parse_double(tok[iy], line_no, "apex_y");
        c.apex_z = detail::parse_double(tok[iz], line_no, "apex_z");
        c.avg_width_m = detail::parse_double(tok[iw], line_no, "avg_width_m");
        c.footprint_area_m2 =
            detail::parse_double(tok[ia], line_no, "footprint_area_m2");
        crowns.push_back(std::move(c));
    }
    return crowns;
}

inline void write_assignments(const std::vector<Crown>& crowns, std::ostream& out) {
    out << "point_id,crown_id\n";
    std::vector<std::pair<std::uint32_t, int>> rows;
    for (const Crown& c : crowns)
        for (std::uint32_t id : c.member_point_ids) rows.push_back({id, c.id});
    std::sort(rows.begin(), rows.end());
    for (const auto& [pid, cid] : rows) out << pid << ',' << cid << '\n';
}

inline void write_group_metrics_row(std::ostream& out, const char* name,
                                    const GroupMetrics& g) {
    out << name << ',' << g.mt << ',' << g.oe << ',' << g.ce << ',' << fmt_g6(g.re)
        << ',' << fmt_g6(g.pr) << ',' << fmt_g6(g.f) << '\n';
}

inline void write_match_report(const MatchReport& report, std::ostream& out) {
    out << "plot_id," << report.plot_id << '\n';
    out << "group,MT,OE,CE,Re,Pr,F\n";
    write_group_metrics_row(out, "over-story", report.overstory);
    write_group_metrics_row(out, "under-story", report.understory);
    write_group_metrics_row(out, "all", report.overall);
    out << "pairs,crown_id,stem_index,score\n";
    std::vector<MatchedPair> pairs = report.pairs;
    std::sort(pairs.begin(), pairs.end(), [](const MatchedPair& a, const MatchedPair& b) {
        return a.stem_index < b.stem_index;
    });
    for (const MatchedPair& p : pairs)
        out << "pair," << p.crown_id << ',' << p.stem_index << ',' << fmt_g6(p.score)
            << '\n';
    out << "note,group CE attributed to the nearest stem's group (reporting "
           "convention)\n";
}

inline void write_aggregate_summary(const AggregateSummary& s, std::ostream& out) {
    out << "group,metric,mean,samples\n";
    const std::pair<const char*, const GroupAggregate*> groups[] = {
        {"over-story", &s.overstory}, {"under-story", &s.understory}, {"all", &s.overall}};
    for (const auto& [name, g] : groups) {
        out << name << ",Re," << fmt_g6(g->re.mean) << ',' << g->re.samples << '\n';
        out << name << ",Pr," << fmt_g6(g->pr.mean) << ',' << g->pr.samples << '\n';
        out << name << ",F," << fmt_g6(g->f.mean) << ',' << g->f.samples << '\n';
    }
}

inline void write_comparison(const std::vector<ComparisonRow>& rows, std::ostream& out) {
    out << "group,metric,samples,baseline_mean,stratified_mean,mean_delta_pp,mse\n";
    for (const ComparisonRow& r : rows)
        out << r.group << ',' << r.metric << ',' << r.samples << ',' << fmt_g6(r.mean_a)
            << ',' << fmt_g6(r.mean_b) << ',' << fmt_g6(r.mean_delta_pp) << ','
            << fmt_g6(r.mse) << '\n';
}

// Everything one pipeline run can emit; write_reports lays the files out
// with stable names so identical inputs give identical bytes.
struct ReportBundle {
    std::vector<CanopyLayer> layers;
    std::vector<Crown> crowns;
    std::vector<MatchReport> match_reports;
    std::optional<AggregateSummary> aggregate;
    std::optional<std::vector<ComparisonRow>> comparison;
};

inline std::vector<std::string> write_reports(const ReportBundle& bundle,
                                              const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory: " + out_dir);

    std::vector<std::string> written;
    auto open = [&](const std::string& name) {
        const std::string path = (fs::path(out_dir) / name).string();
        std::ofstream out(path);
        if (!out) throw IoError("cannot write report file: " + path);
        written.push_back(path);
        return out;
    };

    {
        std::ofstream out = open("layer_stats.csv");
        write_layer_stats(bundle.layers, out);
    }
    {
        std::ofstream out = open("crowns.csv");
        write_crowns(bundle.crowns, out);
    }
    for (const MatchReport& r : bundle.match_reports) {
        std::ofstream out = open("match_" + (r.plot_id.empty() ? "plot" : r.plot_id) +
                                 ".csv");
        write_match_report(r, out);
    }
    if (bundle.aggregate) {
        std::ofstream out = open("aggregate_summary.csv");
        write_aggregate_summary(*bundle.aggregate, out);
    }
    if (bundle.comparison) {
        std::ofstream out = open("comparison.csv");
        write_comparison(*bundle.comparison, out);
    }
    return written;
}

// FNV-1a digest of file bytes, for run manifests.
inline std::uint64_t fnv1a_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file for digest: " + path);
    std::uint64_t hash = 1469598103934665603ull;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            hash ^= static_cast<unsigned char>(buf[i]);
            hash *= 1099511628211ull;
        }
        if (!in) break;
    }
    return hash;
}

} // namespace canopy
