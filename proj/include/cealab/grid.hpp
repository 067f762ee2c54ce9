#pragma once

// Toroidal 2D grid topology: cell addressing and radius-1 Von Neumann
// neighborhoods. Cells are numbered row-major; all wrap-around is modular.

#include <array>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace cealab {

using CellIndex = std::uint32_t;

/// Dimensions of a toroidal grid. Both sides must be at least 3 so the
/// 5-cell Von Neumann neighborhood has distinct members.
struct GridShape {
    std::uint32_t width;
    std::uint32_t height;

    GridShape(std::uint32_t w, std::uint32_t h) : width(w), height(h) {
        if (w < 3 || h < 3)
            throw std::invalid_argument("GridShape: sides must be >= 3, got " +
                                        std::to_string(w) + "x" + std::to_string(h));
    }

    /// Population size lambda = width * height.
    std::uint32_t size() const noexcept { return width * height; }

    CellIndex cell(std::uint32_t row, std::uint32_t col) const noexcept {
        return row * width + col;
    }
    std::uint32_t row_of(CellIndex c) const noexcept { return c / width; }
    std::uint32_t col_of(CellIndex c) const noexcept { return c % width; }
    bool contains(CellIndex c) const noexcept { return c < size(); }

    void require(CellIndex c) const {
        if (!contains(c))
            throw std::out_of_range("cell index " + std::to_string(c) + " outside " +
                                    std::to_string(width) + "x" + std::to_string(height) +
                                    " grid");
    }

    bool operator==(const GridShape&) const = default;
};

/// A cell plus its four orthogonal neighbors with toroidal wrap-around.
struct Neighborhood {
    CellIndex center;
    CellIndex north;
    CellIndex south;
    CellIndex east;
    CellIndex west;

    std::array<CellIndex, 5> as_array() const noexcept {
        return {center, north, south, east, west};
    }
};

inline Neighborhood neighborhood(const GridShape& shape, CellIndex c) {
    shape.require(c);
    const std::uint32_t r = shape.row_of(c);
    const std::uint32_t col = shape.col_of(c);
    const std::uint32_t w = shape.width;
    const std::uint32_t h = shape.height;
    return Neighborhood{
        .center = c,
        .north = shape.cell((r + h - 1) % h, col),
        .south = shape.cell((r + 1) % h, col),
        .east = shape.cell(r, (col + 1) % w),
        .west = shape.cell(r, (col + w - 1) % w),
    };
}

/// Shortest L1 distance between two cells on the torus.
inline std::uint32_t manhattan_torus_distance(const GridShape& shape, CellIndex a, CellIndex b) {
    shape.require(a);
    shape.require(b);
    const auto axis = [](std::uint32_t x, std::uint32_t y, std::uint32_t extent) {
        const std::uint32_t d = x > y ? x - y : y - x;
        return std::min(d, extent - d);
    };
    return axis(shape.row_of(a), shape.row_of(b), shape.height) +
           axis(shape.col_of(a), shape.col_of(b), shape.width);
}

} // namespace cealab
