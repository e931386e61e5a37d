// SPDX-License-Identifier: MIT
#include "vhj/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vhj/errors.hpp"

namespace vhj {

namespace {

std::vector<double> uniform_nodes(std::size_t n) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<double>(i) / static_cast<double>(n - 1);
    return x;
}

// Geometric ramps of growth `ratio` from h_min at both ends, joined by a
// uniform middle section whose spacing h_mid makes the cell count exact.
std::vector<double> refined_nodes(const GridSpec& spec) {
    const std::size_t cells = spec.nodes - 1;
    const double r = spec.ratio;
    double h_mid = 1.0 / static_cast<double>(cells);
    std::size_t n_ramp = 0;
    for (int iter = 0; iter < 200; ++iter) {
        n_ramp = h_mid > spec.h_min
                     ? static_cast<std::size_t>(std::ceil(std::log(h_mid / spec.h_min) / std::log(r)))
                     : 0;
        if (2 * n_ramp >= cells) throw PreconditionError("grid: too few nodes for the requested h_min/ratio");
        const double ramp_len = spec.h_min * (std::pow(r, static_cast<double>(n_ramp)) - 1.0) / (r - 1.0);
        const double next = (1.0 - 2.0 * ramp_len) / static_cast<double>(cells - 2 * n_ramp);
        if (std::abs(next - h_mid) < 1e-15) break;
        h_mid = 0.5 * (h_mid + next);
    }
    std::vector<double> h;
    h.reserve(cells);
    for (std::size_t j = 0; j < n_ramp; ++j) h.push_back(std::min(h_mid, spec.h_min * std::pow(r, double(j))));
    const std::size_t n_mid = cells - 2 * n_ramp;
    for (std::size_t j = 0; j < n_mid; ++j) h.push_back(h_mid);
    for (std::size_t j = n_ramp; j-- > 0;) h.push_back(std::min(h_mid, spec.h_min * std::pow(r, double(j))));
    std::vector<double> x(spec.nodes, 0.0);
    for (std::size_t i = 0; i < cells; ++i) x[i + 1] = x[i] + h[i];
    const double total = x.back();
    for (auto& v : x) v /= total;
    x.back() = 1.0;
    return x;
}

}  // namespace

Grid::Grid(std::vector<double> nodes, Grading grading) : nodes_(std::move(nodes)), grading_(grading) {
    if (nodes_.size() < 3) throw PreconditionError("grid needs at least 3 nodes");
    if (nodes_.front() != 0.0 || nodes_.back() != 1.0) throw PreconditionError("grid must span [0,1]");
    for (std::size_t i = 0; i + 1 < nodes_.size(); ++i) {
        if (!(nodes_[i + 1] > nodes_[i])) throw PreconditionError("grid nodes must be strictly increasing");
    }
}

std::shared_ptr<const Grid> Grid::make(const GridSpec& spec) {
    if (spec.nodes < 3) throw PreconditionError("grid needs at least 3 nodes");
    if (spec.grading == Grading::uniform) {
        return std::shared_ptr<const Grid>(new Grid(uniform_nodes(spec.nodes), Grading::uniform));
    }
    if (!(spec.ratio > 1.0 && spec.ratio <= 1.2)) {
        throw PreconditionError("grid ratio must lie in (1, 1.2], got " + std::to_string(spec.ratio));
    }
    return std::shared_ptr<const Grid>(new Grid(refined_nodes(spec), Grading::boundary_refined));
}

std::shared_ptr<const Grid> Grid::refined(const Grid& coarse) {
    std::vector<double> x;
    x.reserve(2 * coarse.size() - 1);
    for (std::size_t i = 0; i + 1 < coarse.size(); ++i) {
        x.push_back(coarse[i]);
        x.push_back(0.5 * (coarse[i] + coarse[i + 1]));
    }
    x.push_back(1.0);
    return std::shared_ptr<const Grid>(new Grid(std::move(x), coarse.grading()));
}

std::shared_ptr<const Grid> Grid::from_nodes(std::vector<double> nodes, Grading grading) {
    return std::shared_ptr<const Grid>(new Grid(std::move(nodes), grading));
}

double Grid::min_spacing() const {
    double m = spacing(0);
    for (std::size_t i = 1; i + 1 < size(); ++i) m = std::min(m, spacing(i));
    return m;
}

double Grid::max_spacing() const {
    double m = 0.0;
    for (std::size_t i = 0; i + 1 < size(); ++i) m = std::max(m, spacing(i));
    return m;
}

double Grid::max_adjacent_ratio() const {
    double m = 1.0;
    for (std::size_t i = 0; i + 2 < size(); ++i) {
        const double a = spacing(i), b = spacing(i + 1);
        m = std::max(m, std::max(a / b, b / a));
    }
    return m;
}

std::size_t Grid::locate(double value) const {
    if (value <= 0.0) return 0;
    if (value >= 1.0) return size() - 1;
    auto it = std::upper_bound(nodes_.begin(), nodes_.end(), value);
    return static_cast<std::size_t>(it - nodes_.begin()) - 1;
}

Field Field::sample(GridPtr grid, const std::function<double(double)>& f, double time) {
    Field out{grid, std::vector<double>(grid->size()), time};
    for (std::size_t i = 0; i < grid->size(); ++i) out.values[i] = f((*grid)[i]);
    return out;
}

double Field::sup_norm() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
}

double Field::at(double x) const {
    const std::size_t i = grid->locate(x);
    if (i + 1 >= grid->size()) return values.back();
    const double w = (x - (*grid)[i]) / grid->spacing(i);
    return (1.0 - w) * values[i] + w * values[i + 1];
}

}  // namespace vhj
