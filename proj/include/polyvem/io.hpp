#pragma once

// JSON serialization of meshes, quality reports and measurement sets.

#include "polyvem/common.hpp"
#include "polyvem/mesh.hpp"
#include "polyvem/study.hpp"

#include <json.hpp>

#include <algorithm>
#include <string>
#include <vector>

namespace polyvem::io {

using json = nlohmann::json;

inline json to_json(const PolygonalMesh& mesh) {
    json v = json::array(), c = json::array();
    for (int i = 0; i < mesh.num_vertices(); ++i) v.push_back({mesh.vertex(i).x(), mesh.vertex(i).y()});
    for (int k = 0; k < mesh.num_cells(); ++k) c.push_back(mesh.cell(k));
    return {{"vertices", v}, {"cells", c}};
}

inline Point parse_point(const json& j) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw Error(ErrorCode::Parse, "expected a point [x, y]");
    return Point(j[0].get<double>(), j[1].get<double>());
}

inline PolygonalMesh mesh_from_json(const json& j) {
    if (!j.is_object() || !j.contains("vertices") || !j.contains("cells"))
        throw Error(ErrorCode::Parse, "mesh needs \"vertices\" and \"cells\"");
    std::vector<Point> vertices;
    for (const auto& p : j.at("vertices")) vertices.push_back(parse_point(p));
    std::vector<std::vector<int>> cells;
    try {
        for (const auto& c : j.at("cells")) cells.push_back(c.get<std::vector<int>>());
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Parse, e.what());
    }
    return PolygonalMesh(std::move(vertices), std::move(cells));
}

inline json to_json(const MeshQualityReport& r, const PolygonalMesh& mesh) {
    return {{"vertices", mesh.num_vertices()},
            {"cells", mesh.num_cells()},
            {"edges", mesh.num_edges()},
            {"h", mesh.h_max()},
            {"area", mesh.total_area()},
            {"min_rho", r.min_rho()},
            {"min_edge_ratio", *std::min_element(r.min_edge_ratio.begin(), r.min_edge_ratio.end())},
            {"star_shaped", r.all_star_shaped()}};
}

/// Accepts a bare array or {"measurements": [...]}. Entries:
///   {"type": "average", "cells": [...]}          level-0 cell ids
///   {"type": "average", "box": [[x0,y0],[x1,y1]]}
///   {"type": "point", "xy": [x, y]}
inline std::vector<MeasurementSpec> measurements_from_json(const json& j) {
    const json& list = j.is_object() && j.contains("measurements") ? j.at("measurements") : j;
    if (!list.is_array()) throw Error(ErrorCode::Parse, "measurements must be an array");
    std::vector<MeasurementSpec> out;
    for (const auto& m : list) {
        const std::string type = m.value("type", "");
        if (type == "point") {
            if (!m.contains("xy")) throw Error(ErrorCode::Parse, "point measurement needs \"xy\"");
            out.push_back(MeasurementSpec::at(parse_point(m.at("xy"))));
        } else if (type == "average" && m.contains("box")) {
            const auto& b = m.at("box");
            if (!b.is_array() || b.size() != 2) throw Error(ErrorCode::Parse, "box must be [[x0,y0],[x1,y1]]");
            out.push_back(MeasurementSpec::box(parse_point(b[0]), parse_point(b[1])));
        } else if (type == "average" && m.contains("cells")) {
            MeasurementSpec s;
            s.kind = MeasurementSpec::Kind::AverageCells;
            try {
                s.cells = m.at("cells").get<std::vector<int>>();
            } catch (const json::exception& e) {
                throw Error(ErrorCode::Parse, e.what());
            }
            out.push_back(std::move(s));
        } else {
            throw Error(ErrorCode::Parse, "unknown measurement entry: " + m.dump());
        }
    }
    return out;
}

inline json to_json(const MeasurementSpec& s) {
    switch (s.kind) {
        case MeasurementSpec::Kind::Point: return {{"type", "point"}, {"xy", {s.point.x(), s.point.y()}}};
        case MeasurementSpec::Kind::AverageBox:
            return {{"type", "average"}, {"box", {{s.lo.x(), s.lo.y()}, {s.hi.x(), s.hi.y()}}}};
        case MeasurementSpec::Kind::AverageCells: return {{"type", "average"}, {"cells", s.cells}};
    }
    return {};
}

inline json to_json(const InverseDump& d) {
    return {{"mesh", to_json(d.mesh)}, {"alpha", d.alpha}, {"dofs", std::vector<double>(d.dofs.begin(), d.dofs.end())}};
}

}  // namespace polyvem::io
