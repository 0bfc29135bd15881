#pragma once

#include <cstdio>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "kobound/calibrate.hpp"
#include "kobound/config.hpp"
#include "kobound/errors.hpp"
#include "kobound/tomo.hpp"

namespace kobound {

struct ScaleRow {
    Geometry geom;
    ParameterCounts counts;
    MemoryTable mem;
};

/// The six reference geometries of the scale accounting, smallest to largest.
inline std::vector<Geometry> default_scale_geometries() {
    return {
        {8, 10, 8},   {16, 20, 16},   {32, 40, 32},
        {128, 60, 128}, {256, 90, 256}, {512, 180, 512},
    };
}

inline std::vector<ScaleRow> build_scale_rows(std::span<const Geometry> geometries) {
    std::vector<ScaleRow> rows;
    rows.reserve(geometries.size());
    for (const Geometry& g : geometries) rows.push_back({g, parameter_counts(g), memory_table(g)});
    return rows;
}

/// `scales = h:v:b h:v:b ...` from the [scale_table] section; defaults when
/// the section or key is absent.
inline std::vector<Geometry> scale_geometries_from(const Config& cfg) {
    const ConfigSection* sec = cfg.find("scale_table");
    if (!sec) return default_scale_geometries();
    const auto value = sec->get("scales");
    if (!value) return default_scale_geometries();
    std::vector<Geometry> geoms;
    for (const std::string& item : detail::split_list(*value)) {
        Geometry g;
        if (std::sscanf(item.c_str(), "%d:%d:%d", &g.h, &g.v, &g.b) != 3)
            throw InputError("scale_table: expected h:v:b, got '" + item + "'");
        validate(g);
        geoms.push_back(g);
    }
    return geoms;
}

inline std::string render_scale_table_text(std::span<const ScaleRow> rows) {
    std::ostringstream out;
    char line[256];
    std::snprintf(line, sizeof line, "%6s %5s %5s %14s %16s %10s %12s %12s %12s %12s\n", "H", "V",
                  "B", "p_ko", "p_fc", "p_fc/p_ko", "ko fp32", "ko adam", "fc fp32", "fc adam");
    out << line;
    for (const ScaleRow& r : rows) {
        std::snprintf(line, sizeof line, "%6d %5d %5d %14lld %16lld %10lld %12s %12s %12s %12s\n",
                      r.geom.h, r.geom.v, r.geom.b, r.counts.p_ko, r.counts.p_fc, r.counts.ratio,
                      format_mem(r.mem.ko_fp32_bytes).c_str(), format_mem(r.mem.ko_adam_bytes).c_str(),
                      format_mem(r.mem.fc_fp32_bytes).c_str(),
                      format_mem(r.mem.fc_adam_bytes).c_str());
        out << line;
    }
    return out.str();
}

inline void write_scale_table_csv(std::ostream& out, std::span<const ScaleRow> rows) {
    out << "h,v,b,p_ko,p_fc,ratio,ko_fp32_bytes,ko_adam_bytes,fc_fp32_bytes,fc_adam_bytes\n";
    for (const ScaleRow& r : rows)
        out << r.geom.h << ',' << r.geom.v << ',' << r.geom.b << ',' << r.counts.p_ko << ','
            << r.counts.p_fc << ',' << r.counts.ratio << ',' << r.mem.ko_fp32_bytes << ','
            << r.mem.ko_adam_bytes << ',' << r.mem.fc_fp32_bytes << ',' << r.mem.fc_adam_bytes
            << '\n';
}

inline void write_scale_table_csv(const std::string& path, std::span<const ScaleRow> rows) {
    std::ofstream out(path);
    if (!out) throw InputError("write_scale_table_csv: cannot open " + path);
    write_scale_table_csv(out, rows);
}

}  // namespace kobound
