#pragma once

// 3D radiomics over a parameter map restricted to the tumor region
// (mask intersected with the map's validity mask): 18 first-order
// statistics, 5 shape descriptors and 10 gray-level co-occurrence matrix
// (GLCM) texture features, 33 per (map, mask) pair.
//
// Intensities are discretized into a fixed COUNT of equal-width bins over
// the masked range (parameter maps have heterogeneous ranges, so a fixed
// bin width would not transfer between ADC and F maps). Bins are
// right-closed: level = ceil((x - min) / width), clamped to [1, bin_count],
// and a zero-range region maps entirely to level 1.
//
// GLCM features use 13 symmetric offsets at Chebyshev distance 1 and are
// averaged over the offsets that have at least one co-occurring pair.
// Degenerate rules keep every feature finite: correlation is 0 when a
// marginal has zero variance; skewness/kurtosis are 0 for zero-variance
// regions.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

#include "pddwi/core.hpp"
#include "pddwi/feature_vector.hpp"

namespace pddwi {

struct DiscretizationConfig {
    std::size_t bin_count = 32;

    void validate() const {
        if (bin_count < 2) throw std::invalid_argument("DiscretizationConfig: bin_count >= 2");
    }
};

struct ExtractionError : DataError {
    using DataError::DataError;
};

namespace detail {

inline std::vector<std::size_t> region_indices(const Mask3& mask, const Mask3* valid) {
    std::vector<std::size_t> idx;
    for (std::size_t v = 0; v < mask.size(); ++v)
        if (mask[v] && (!valid || (*valid)[v])) idx.push_back(v);
    return idx;
}

// Linear-interpolation percentile over a sorted sample, q in [0, 100].
inline double percentile_sorted(const std::vector<double>& sorted, double q) {
    const std::size_t n = sorted.size();
    if (n == 1) return sorted[0];
    const double rank = q / 100.0 * static_cast<double>(n - 1);
    const std::size_t lo = static_cast<std::size_t>(rank);
    if (lo + 1 >= n) return sorted[n - 1];
    const double frac = rank - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace detail

// Levels 1..bin_count inside mask-and-valid, 0 elsewhere.
inline Volume3<int> discretize(const ParameterMap& map, const Mask3& mask,
                               const DiscretizationConfig& cfg = {}) {
    cfg.validate();
    if (map.data.dims() != mask.dims())
        throw std::invalid_argument("discretize: map and mask dims differ");

    const auto region = detail::region_indices(mask, &map.valid);
    if (region.empty()) throw ExtractionError("discretize: empty mask-and-valid region");

    double lo = map.data[region.front()], hi = lo;
    for (auto v : region) {
        lo = std::min(lo, map.data[v]);
        hi = std::max(hi, map.data[v]);
    }

    Volume3<int> levels(map.data.dims(), 0);
    if (hi == lo) {
        for (auto v : region) levels[v] = 1;
        return levels;
    }
    const double width = (hi - lo) / static_cast<double>(cfg.bin_count);
    for (auto v : region) {
        const auto raw = static_cast<long>(std::ceil((map.data[v] - lo) / width));
        levels[v] = static_cast<int>(
            std::clamp(raw, 1L, static_cast<long>(cfg.bin_count)));
    }
    return levels;
}

inline FeatureVector firstorder_features(const ParameterMap& map, const Mask3& mask,
                                         const DiscretizationConfig& cfg = {}) {
    const auto region = detail::region_indices(mask, &map.valid);
    if (region.empty()) throw ExtractionError("firstorder: empty mask-and-valid region");

    const double n = static_cast<double>(region.size());
    std::vector<double> values;
    values.reserve(region.size());
    for (auto v : region) values.push_back(map.data[v]);

    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());

    double sum = 0.0, sum_sq = 0.0;
    for (double x : values) {
        sum += x;
        sum_sq += x * x;
    }
    const double mean = sum / n;

    double m2 = 0.0, m3 = 0.0, m4 = 0.0, abs_dev = 0.0;
    for (double x : values) {
        const double d = x - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
        abs_dev += std::abs(d);
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;

    const double variance = m2;
    const double skewness = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
    const double kurtosis = m2 > 0.0 ? m4 / (m2 * m2) : 0.0;

    const double p10 = detail::percentile_sorted(sorted, 10.0);
    const double p25 = detail::percentile_sorted(sorted, 25.0);
    const double median = detail::percentile_sorted(sorted, 50.0);
    const double p75 = detail::percentile_sorted(sorted, 75.0);
    const double p90 = detail::percentile_sorted(sorted, 90.0);

    // Robust MAD: mean absolute deviation of the 10th..90th percentile
    // sub-sample around its own mean.
    double rsum = 0.0;
    std::size_t rcount = 0;
    for (double x : sorted)
        if (x >= p10 && x <= p90) {
            rsum += x;
            ++rcount;
        }
    double rmad = 0.0;
    if (rcount > 0) {
        const double rmean = rsum / static_cast<double>(rcount);
        for (double x : sorted)
            if (x >= p10 && x <= p90) rmad += std::abs(x - rmean);
        rmad /= static_cast<double>(rcount);
    }

    // Entropy and uniformity come from the discretized histogram.
    const auto levels = discretize(map, mask, cfg);
    std::vector<double> hist(cfg.bin_count, 0.0);
    for (auto v : region) hist[static_cast<std::size_t>(levels[v] - 1)] += 1.0;
    double entropy = 0.0, uniformity = 0.0;
    for (double c : hist) {
        if (c == 0.0) continue;
        const double p = c / n;
        entropy -= p * std::log2(p);
        uniformity += p * p;
    }

    FeatureVector fv;
    fv.push("energy", sum_sq);
    fv.push("entropy", entropy);
    fv.push("interquartile_range", p75 - p25);
    fv.push("kurtosis", kurtosis);
    fv.push("mad", abs_dev / n);
    fv.push("max", sorted.back());
    fv.push("mean", mean);
    fv.push("median", median);
    fv.push("min", sorted.front());
    fv.push("p10", p10);
    fv.push("p90", p90);
    fv.push("range", sorted.back() - sorted.front());
    fv.push("rmad", rmad);
    fv.push("rms", std::sqrt(sum_sq / n));
    fv.push("skewness", skewness);
    fv.push("total_energy", map.spacing.voxel_volume() * sum_sq);
    fv.push("uniformity", uniformity);
    fv.push("variance", variance);
    return fv;
}

inline FeatureVector shape_features(const Mask3& mask, const Spacing& spacing) {
    std::vector<std::size_t> region = detail::region_indices(mask, nullptr);
    if (region.empty()) throw ExtractionError("shape: empty mask");

    const Dims3 dims = mask.dims();
    const double voxel_vol = spacing.voxel_volume();

    // Exposed-face surface area and the surface voxel list in one sweep.
    double surface_area = 0.0;
    std::vector<std::array<double, 3>> surface_pts;  // physical coords (z,y,x) mm
    std::size_t min_z = dims.nz, max_z = 0, min_y = dims.ny, max_y = 0, min_x = dims.nx,
                max_x = 0;

    auto masked = [&](long z, long y, long x) {
        if (z < 0 || y < 0 || x < 0 || z >= static_cast<long>(dims.nz) ||
            y >= static_cast<long>(dims.ny) || x >= static_cast<long>(dims.nx))
            return false;
        return mask.at(static_cast<std::size_t>(z), static_cast<std::size_t>(y),
                       static_cast<std::size_t>(x)) != 0;
    };

    for (std::size_t z = 0; z < dims.nz; ++z) {
        for (std::size_t y = 0; y < dims.ny; ++y) {
            for (std::size_t x = 0; x < dims.nx; ++x) {
                if (!mask.at(z, y, x)) continue;
                min_z = std::min(min_z, z), max_z = std::max(max_z, z);
                min_y = std::min(min_y, y), max_y = std::max(max_y, y);
                min_x = std::min(min_x, x), max_x = std::max(max_x, x);

                bool on_surface = false;
                const long zi = static_cast<long>(z), yi = static_cast<long>(y),
                           xi = static_cast<long>(x);
                if (!masked(zi - 1, yi, xi)) surface_area += spacing.dy * spacing.dx, on_surface = true;
                if (!masked(zi + 1, yi, xi)) surface_area += spacing.dy * spacing.dx, on_surface = true;
                if (!masked(zi, yi - 1, xi)) surface_area += spacing.dz * spacing.dx, on_surface = true;
                if (!masked(zi, yi + 1, xi)) surface_area += spacing.dz * spacing.dx, on_surface = true;
                if (!masked(zi, yi, xi - 1)) surface_area += spacing.dz * spacing.dy, on_surface = true;
                if (!masked(zi, yi, xi + 1)) surface_area += spacing.dz * spacing.dy, on_surface = true;
                if (on_surface)
                    surface_pts.push_back({static_cast<double>(z) * spacing.dz,
                                           static_cast<double>(y) * spacing.dy,
                                           static_cast<double>(x) * spacing.dx});
            }
        }
    }

    // Max pairwise distance of voxel centers. Restricting the search to
    // surface voxels is exact: an interior voxel center is a midpoint of
    // two neighbors, so it cannot be an extreme point.
    double max_diameter_sq = 0.0;
    for (std::size_t i = 0; i < surface_pts.size(); ++i) {
        for (std::size_t j = i + 1; j < surface_pts.size(); ++j) {
            const double dz = surface_pts[i][0] - surface_pts[j][0];
            const double dy = surface_pts[i][1] - surface_pts[j][1];
            const double dx = surface_pts[i][2] - surface_pts[j][2];
            max_diameter_sq = std::max(max_diameter_sq, dz * dz + dy * dy + dx * dx);
        }
    }

    const double volume = static_cast<double>(region.size()) * voxel_vol;
    constexpr double pi = 3.14159265358979323846;
    const double sphericity =
        std::pow(pi, 1.0 / 3.0) * std::pow(6.0 * volume, 2.0 / 3.0) / surface_area;

    // Axis-aligned bounding-box physical extents; elongation compares the
    // two longest.
    std::array<double, 3> extents{static_cast<double>(max_z - min_z + 1) * spacing.dz,
                                  static_cast<double>(max_y - min_y + 1) * spacing.dy,
                                  static_cast<double>(max_x - min_x + 1) * spacing.dx};
    std::sort(extents.begin(), extents.end());
    const double elongation = extents[1] / extents[2];

    FeatureVector fv;
    fv.push("bbox_elongation", elongation);
    fv.push("max_diameter", std::sqrt(max_diameter_sq));
    fv.push("sphericity", sphericity);
    fv.push("surface_area", surface_area);
    fv.push("volume", volume);
    return fv;
}

// The 13 unique direction pairs of the 26-neighborhood, (dz, dy, dx).
inline const std::vector<std::array<int, 3>>& glcm_offsets() {
    static const std::vector<std::array<int, 3>> offsets{
        {0, 0, 1}, {0, 1, 0},  {1, 0, 0},  {0, 1, 1},  {0, 1, -1},  {1, 0, 1},   {1, 0, -1},
        {1, 1, 0}, {1, -1, 0}, {1, 1, 1},  {1, 1, -1}, {1, -1, 1},  {1, -1, -1}};
    return offsets;
}

// Symmetric, normalized co-occurrence matrix for one offset.
struct Glcm {
    std::size_t ng = 0;          // levels 1..ng
    std::vector<double> p;       // ng x ng row-major, sums to 1
    double total_pairs = 0.0;    // unnormalized symmetric count

    double at(std::size_t i, std::size_t j) const { return p[(i - 1) * ng + (j - 1)]; }
};

// One matrix per offset that has at least one co-occurring pair.
inline std::vector<Glcm> glcm_matrices(const Volume3<int>& levels, const Mask3& mask) {
    if (levels.dims() != mask.dims())
        throw std::invalid_argument("glcm: levels and mask dims differ");

    const Dims3 dims = levels.dims();
    int ng_i = 0;
    for (std::size_t v = 0; v < levels.size(); ++v)
        if (mask[v]) ng_i = std::max(ng_i, levels[v]);
    const std::size_t ng = static_cast<std::size_t>(std::max(ng_i, 1));

    std::vector<Glcm> out;
    for (const auto& off : glcm_offsets()) {
        std::vector<double> counts(ng * ng, 0.0);
        double total = 0.0;
        for (std::size_t z = 0; z < dims.nz; ++z) {
            const long z2 = static_cast<long>(z) + off[0];
            if (z2 < 0 || z2 >= static_cast<long>(dims.nz)) continue;
            for (std::size_t y = 0; y < dims.ny; ++y) {
                const long y2 = static_cast<long>(y) + off[1];
                if (y2 < 0 || y2 >= static_cast<long>(dims.ny)) continue;
                for (std::size_t x = 0; x < dims.nx; ++x) {
                    const long x2 = static_cast<long>(x) + off[2];
                    if (x2 < 0 || x2 >= static_cast<long>(dims.nx)) continue;
                    const std::size_t v = levels.index(z, y, x);
                    const std::size_t w = levels.index(static_cast<std::size_t>(z2),
                                                       static_cast<std::size_t>(y2),
                                                       static_cast<std::size_t>(x2));
                    if (!mask[v] || !mask[w] || levels[v] == 0 || levels[w] == 0) continue;
                    const auto i = static_cast<std::size_t>(levels[v] - 1);
                    const auto j = static_cast<std::size_t>(levels[w] - 1);
                    counts[i * ng + j] += 1.0;
                    counts[j * ng + i] += 1.0;
                    total += 2.0;
                }
            }
        }
        if (total == 0.0) continue;
        for (auto& c : counts) c /= total;
        out.push_back(Glcm{ng, std::move(counts), total});
    }
    return out;
}

namespace detail {

inline void glcm_accumulate(const Glcm& g, FeatureVector& sums) {
    const std::size_t ng = g.ng;

    std::vector<double> marginal(ng, 0.0);
    for (std::size_t i = 1; i <= ng; ++i)
        for (std::size_t j = 1; j <= ng; ++j) marginal[i - 1] += g.at(i, j);

    double mu = 0.0;
    for (std::size_t i = 1; i <= ng; ++i) mu += static_cast<double>(i) * marginal[i - 1];
    double var = 0.0;
    for (std::size_t i = 1; i <= ng; ++i) {
        const double d = static_cast<double>(i) - mu;
        var += d * d * marginal[i - 1];
    }

    double contrast = 0.0, dissimilarity = 0.0, homogeneity = 0.0, energy = 0.0;
    double joint_entropy = 0.0, joint_maximum = 0.0, cluster_tendency = 0.0;
    double inv_diff = 0.0, inv_diff_moment = 0.0, cross = 0.0;
    const double ngd = static_cast<double>(ng);

    for (std::size_t i = 1; i <= ng; ++i) {
        for (std::size_t j = 1; j <= ng; ++j) {
            const double p = g.at(i, j);
            if (p == 0.0) continue;
            const double di = static_cast<double>(i), dj = static_cast<double>(j);
            const double diff = std::abs(di - dj);
            contrast += diff * diff * p;
            dissimilarity += diff * p;
            homogeneity += p / (1.0 + diff);
            energy += p * p;
            joint_entropy -= p * std::log2(p);
            joint_maximum = std::max(joint_maximum, p);
            cluster_tendency += (di + dj - 2.0 * mu) * (di + dj - 2.0 * mu) * p;
            inv_diff += p / (1.0 + diff / ngd);
            inv_diff_moment += p / (1.0 + diff * diff);
            cross += di * dj * p;
        }
    }
    const double correlation = var > 0.0 ? (cross - mu * mu) / var : 0.0;

    FeatureVector fv;
    fv.push("cluster_tendency", cluster_tendency);
    fv.push("contrast", contrast);
    fv.push("correlation", correlation);
    fv.push("dissimilarity", dissimilarity);
    fv.push("energy", energy);
    fv.push("homogeneity", homogeneity);
    fv.push("inverse_difference", inv_diff);
    fv.push("inverse_difference_moment", inv_diff_moment);
    fv.push("joint_entropy", joint_entropy);
    fv.push("joint_maximum", joint_maximum);

    if (sums.size() == 0) {
        sums = fv;
    } else {
        FeatureVector merged;
        for (std::size_t k = 0; k < fv.entries().size(); ++k)
            merged.push(fv.entries()[k].first,
                        fv.entries()[k].second + sums.entries()[k].second);
        sums = merged;
    }
}

}  // namespace detail

inline FeatureVector glcm_features(const Volume3<int>& levels, const Mask3& mask) {
    std::size_t region = 0;
    for (std::size_t v = 0; v < levels.size(); ++v)
        if (mask[v] && levels[v] > 0) ++region;
    if (region < 2) throw ExtractionError("glcm: need at least 2 voxels in region");

    const auto matrices = glcm_matrices(levels, mask);

    FeatureVector sums;
    for (const auto& g : matrices) detail::glcm_accumulate(g, sums);

    FeatureVector fv;
    if (matrices.empty()) {
        // Region with no co-occurring pair at distance 1 (all voxels
        // isolated): every texture feature is defined as 0.
        for (const char* name : {"cluster_tendency", "contrast", "correlation", "dissimilarity",
                                 "energy", "homogeneity", "inverse_difference",
                                 "inverse_difference_moment", "joint_entropy", "joint_maximum"})
            fv.push(name, 0.0);
        return fv;
    }
    for (const auto& [name, total] : sums.entries())
        fv.push(name, total / static_cast<double>(matrices.size()));
    return fv;
}

// All three classes with class-prefixed names, in class order
// first-order, shape, glcm (lexicographic within each class). Invalid map
// voxels are excluded exactly as if they were missing from the mask.
inline FeatureVector extract_all(const ParameterMap& map, const Mask3& mask,
                                 const DiscretizationConfig& cfg = {}) {
    if (map.data.dims() != mask.dims())
        throw std::invalid_argument("extract_all: map and mask dims differ");

    Mask3 region(mask.dims(), 0);
    std::size_t count = 0;
    for (std::size_t v = 0; v < mask.size(); ++v)
        if (mask[v] && map.valid[v]) region[v] = 1, ++count;
    if (count == 0) throw ExtractionError("extract_all: empty mask-and-valid region");

    FeatureVector out;
    const auto firstorder = firstorder_features(map, region, cfg);
    for (const auto& [n, x] : firstorder.entries()) out.push("firstorder_" + n, x);
    const auto shape = shape_features(region, map.spacing);
    for (const auto& [n, x] : shape.entries()) out.push("shape_" + n, x);
    const auto levels = discretize(map, region, cfg);
    const auto glcm = glcm_features(levels, region);
    for (const auto& [n, x] : glcm.entries()) out.push("glcm_" + n, x);
    return out;
}

}  // namespace pddwi
