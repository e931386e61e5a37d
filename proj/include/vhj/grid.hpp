// SPDX-License-Identifier: MIT
#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace vhj {

enum class Grading { uniform, boundary_refined };

struct GridSpec {
    std::size_t nodes = 4097;
    Grading grading = Grading::boundary_refined;
    double ratio = 1.05;      ///< geometric growth of the spacing away from each end
    double h_min = 1e-6;      ///< spacing of the first cell at x = 0 and x = 1
};

/// Strictly increasing nodes from 0 to 1.
class Grid {
public:
    static std::shared_ptr<const Grid> make(const GridSpec& spec);
    /// Bisect every cell; keeps the grading pattern.
    static std::shared_ptr<const Grid> refined(const Grid& coarse);
    static std::shared_ptr<const Grid> from_nodes(std::vector<double> nodes, Grading grading);

    std::span<const double> nodes() const { return nodes_; }
    std::size_t size() const { return nodes_.size(); }
    double operator[](std::size_t i) const { return nodes_[i]; }
    double spacing(std::size_t i) const { return nodes_[i + 1] - nodes_[i]; }
    double min_spacing() const;
    double max_spacing() const;
    double max_adjacent_ratio() const;
    Grading grading() const { return grading_; }
    /// Index of the last node with x <= value.
    std::size_t locate(double value) const;

private:
    Grid(std::vector<double> nodes, Grading grading);
    std::vector<double> nodes_;
    Grading grading_;
};

using GridPtr = std::shared_ptr<const Grid>;

/// Grid-sampled function on [0,1] at one time.
struct Field {
    GridPtr grid;
    std::vector<double> values;
    double time = 0.0;

    static Field sample(GridPtr grid, const std::function<double(double)>& f, double time = 0.0);
    double sup_norm() const;
    /// Piecewise-linear interpolation.
    double at(double x) const;
};

}  // namespace vhj
