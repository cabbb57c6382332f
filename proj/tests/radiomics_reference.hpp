#pragma once

// Independent brute-force reference for the radiomics features. Written
// against the documented feature definitions only: plain loops, all-pairs
// diameter, per-offset pair enumeration. Used by the unit tests and the
// acceptance suite to cross-check the library implementation.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "pddwi/core.hpp"

namespace radiomics_ref {

struct Voxel {
    long z, y, x;
    double value;
};

inline double percentile(std::vector<double> values, double q) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n == 1) return values[0];
    const double rank = q / 100.0 * static_cast<double>(n - 1);
    const auto lo = static_cast<std::size_t>(std::floor(rank));
    if (lo + 1 >= n) return values[n - 1];
    return values[lo] + (rank - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
}

inline std::vector<int> discretize(const std::vector<double>& values, std::size_t bins) {
    double lo = values[0], hi = values[0];
    for (double v : values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    std::vector<int> levels;
    for (double v : values) {
        if (hi == lo) {
            levels.push_back(1);
            continue;
        }
        const double width = (hi - lo) / static_cast<double>(bins);
        long level = static_cast<long>(std::ceil((v - lo) / width));
        if (level < 1) level = 1;
        if (level > static_cast<long>(bins)) level = static_cast<long>(bins);
        levels.push_back(static_cast<int>(level));
    }
    return levels;
}

inline std::map<std::string, double> firstorder(const std::vector<Voxel>& region,
                                                const pddwi::Spacing& spacing,
                                                std::size_t bins) {
    std::vector<double> values;
    for (const auto& v : region) values.push_back(v.value);
    const double n = static_cast<double>(values.size());

    std::map<std::string, double> f;
    double sum = 0, sumsq = 0;
    for (double v : values) sum += v, sumsq += v * v;
    const double mean = sum / n;

    double m2 = 0, m3 = 0, m4 = 0, mad = 0;
    for (double v : values) {
        m2 += std::pow(v - mean, 2);
        m3 += std::pow(v - mean, 3);
        m4 += std::pow(v - mean, 4);
        mad += std::abs(v - mean);
    }
    m2 /= n, m3 /= n, m4 /= n;

    f["mean"] = mean;
    f["median"] = percentile(values, 50);
    f["min"] = *std::min_element(values.begin(), values.end());
    f["max"] = *std::max_element(values.begin(), values.end());
    f["range"] = f["max"] - f["min"];
    f["variance"] = m2;
    f["skewness"] = m2 > 0 ? m3 / std::pow(m2, 1.5) : 0.0;
    f["kurtosis"] = m2 > 0 ? m4 / (m2 * m2) : 0.0;
    f["energy"] = sumsq;
    f["total_energy"] = spacing.dz * spacing.dy * spacing.dx * sumsq;
    f["p10"] = percentile(values, 10);
    f["p90"] = percentile(values, 90);
    f["interquartile_range"] = percentile(values, 75) - percentile(values, 25);
    f["mad"] = mad / n;
    f["rms"] = std::sqrt(sumsq / n);

    std::vector<double> robust;
    for (double v : values)
        if (v >= f["p10"] && v <= f["p90"]) robust.push_back(v);
    double rmean = 0;
    for (double v : robust) rmean += v;
    rmean /= static_cast<double>(robust.size());
    double rmad = 0;
    for (double v : robust) rmad += std::abs(v - rmean);
    f["rmad"] = rmad / static_cast<double>(robust.size());

    const auto levels = discretize(values, bins);
    std::map<int, double> hist;
    for (int l : levels) hist[l] += 1.0;
    double entropy = 0, uniformity = 0;
    for (const auto& [l, c] : hist) {
        const double p = c / n;
        entropy -= p * std::log2(p);
        uniformity += p * p;
    }
    f["entropy"] = entropy;
    f["uniformity"] = uniformity;
    return f;
}

inline std::map<std::string, double> shape(const std::vector<Voxel>& region,
                                           const pddwi::Spacing& spacing) {
    std::map<std::string, double> f;
    const double n = static_cast<double>(region.size());
    f["volume"] = n * spacing.dz * spacing.dy * spacing.dx;

    auto present = [&](long z, long y, long x) {
        for (const auto& v : region)
            if (v.z == z && v.y == y && v.x == x) return true;
        return false;
    };
    double area = 0;
    for (const auto& v : region) {
        if (!present(v.z - 1, v.y, v.x)) area += spacing.dy * spacing.dx;
        if (!present(v.z + 1, v.y, v.x)) area += spacing.dy * spacing.dx;
        if (!present(v.z, v.y - 1, v.x)) area += spacing.dz * spacing.dx;
        if (!present(v.z, v.y + 1, v.x)) area += spacing.dz * spacing.dx;
        if (!present(v.z, v.y, v.x - 1)) area += spacing.dz * spacing.dy;
        if (!present(v.z, v.y, v.x + 1)) area += spacing.dz * spacing.dy;
    }
    f["surface_area"] = area;
    f["sphericity"] = std::pow(3.14159265358979323846, 1.0 / 3.0) *
                      std::pow(6.0 * f["volume"], 2.0 / 3.0) / area;

    double diam2 = 0;
    for (std::size_t i = 0; i < region.size(); ++i) {
        for (std::size_t j = 0; j < region.size(); ++j) {
            const double dz = static_cast<double>(region[i].z - region[j].z) * spacing.dz;
            const double dy = static_cast<double>(region[i].y - region[j].y) * spacing.dy;
            const double dx = static_cast<double>(region[i].x - region[j].x) * spacing.dx;
            diam2 = std::max(diam2, dz * dz + dy * dy + dx * dx);
        }
    }
    f["max_diameter"] = std::sqrt(diam2);

    long zmin = region[0].z, zmax = region[0].z, ymin = region[0].y, ymax = region[0].y,
         xmin = region[0].x, xmax = region[0].x;
    for (const auto& v : region) {
        zmin = std::min(zmin, v.z), zmax = std::max(zmax, v.z);
        ymin = std::min(ymin, v.y), ymax = std::max(ymax, v.y);
        xmin = std::min(xmin, v.x), xmax = std::max(xmax, v.x);
    }
    std::array<double, 3> ext{static_cast<double>(zmax - zmin + 1) * spacing.dz,
                              static_cast<double>(ymax - ymin + 1) * spacing.dy,
                              static_cast<double>(xmax - xmin + 1) * spacing.dx};
    std::sort(ext.begin(), ext.end());
    f["bbox_elongation"] = ext[1] / ext[2];
    return f;
}

inline std::map<std::string, double> glcm(const std::vector<Voxel>& region,
                                          const std::vector<int>& levels) {
    static const std::array<std::array<int, 3>, 13> offsets{{{0, 0, 1},
                                                             {0, 1, 0},
                                                             {1, 0, 0},
                                                             {0, 1, 1},
                                                             {0, 1, -1},
                                                             {1, 0, 1},
                                                             {1, 0, -1},
                                                             {1, 1, 0},
                                                             {1, -1, 0},
                                                             {1, 1, 1},
                                                             {1, 1, -1},
                                                             {1, -1, 1},
                                                             {1, -1, -1}}};
    int ng = 1;
    for (int l : levels) ng = std::max(ng, l);

    std::map<std::string, double> sums;
    const std::array<const char*, 10> names{
        "cluster_tendency", "contrast",           "correlation",
        "dissimilarity",    "energy",             "homogeneity",
        "inverse_difference", "inverse_difference_moment", "joint_entropy", "joint_maximum"};
    for (const char* n : names) sums[n] = 0.0;
    int contributing = 0;

    for (const auto& off : offsets) {
        std::vector<std::vector<double>> mat(static_cast<std::size_t>(ng),
                                             std::vector<double>(static_cast<std::size_t>(ng), 0));
        double total = 0;
        for (std::size_t i = 0; i < region.size(); ++i) {
            for (std::size_t j = 0; j < region.size(); ++j) {
                if (region[j].z - region[i].z != off[0] || region[j].y - region[i].y != off[1] ||
                    region[j].x - region[i].x != off[2])
                    continue;
                mat[static_cast<std::size_t>(levels[i] - 1)]
                   [static_cast<std::size_t>(levels[j] - 1)] += 1;
                mat[static_cast<std::size_t>(levels[j] - 1)]
                   [static_cast<std::size_t>(levels[i] - 1)] += 1;
                total += 2;
            }
        }
        if (total == 0) continue;
        ++contributing;
        for (auto& row : mat)
            for (auto& c : row) c /= total;

        std::vector<double> marginal(static_cast<std::size_t>(ng), 0);
        for (int i = 0; i < ng; ++i)
            for (int j = 0; j < ng; ++j)
                marginal[static_cast<std::size_t>(i)] +=
                    mat[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        double mu = 0;
        for (int i = 0; i < ng; ++i)
            mu += (i + 1.0) * marginal[static_cast<std::size_t>(i)];
        double var = 0;
        for (int i = 0; i < ng; ++i)
            var += (i + 1.0 - mu) * (i + 1.0 - mu) * marginal[static_cast<std::size_t>(i)];

        double contrast = 0, dissim = 0, homog = 0, energy = 0, entropy = 0, jmax = 0, ct = 0,
               id = 0, idm = 0, cross = 0;
        for (int i = 0; i < ng; ++i) {
            for (int j = 0; j < ng; ++j) {
                const double p = mat[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
                if (p == 0) continue;
                const double gi = i + 1.0, gj = j + 1.0;
                contrast += (gi - gj) * (gi - gj) * p;
                dissim += std::abs(gi - gj) * p;
                homog += p / (1.0 + std::abs(gi - gj));
                energy += p * p;
                entropy -= p * std::log2(p);
                jmax = std::max(jmax, p);
                ct += (gi + gj - 2.0 * mu) * (gi + gj - 2.0 * mu) * p;
                id += p / (1.0 + std::abs(gi - gj) / static_cast<double>(ng));
                idm += p / (1.0 + (gi - gj) * (gi - gj));
                cross += gi * gj * p;
            }
        }
        sums["contrast"] += contrast;
        sums["dissimilarity"] += dissim;
        sums["homogeneity"] += homog;
        sums["energy"] += energy;
        sums["joint_entropy"] += entropy;
        sums["joint_maximum"] += jmax;
        sums["cluster_tendency"] += ct;
        sums["inverse_difference"] += id;
        sums["inverse_difference_moment"] += idm;
        sums["correlation"] += var > 0 ? (cross - mu * mu) / var : 0.0;
    }

    std::map<std::string, double> f;
    for (const char* n : names)
        f[n] = contributing > 0 ? sums[n] / contributing : 0.0;
    return f;
}

// Full 33-feature reference with the library's class-prefixed names.
inline std::map<std::string, double> extract_all(const std::vector<Voxel>& region,
                                                 const pddwi::Spacing& spacing,
                                                 std::size_t bins) {
    std::map<std::string, double> out;
    for (const auto& [n, v] : firstorder(region, spacing, bins)) out["firstorder_" + n] = v;
    for (const auto& [n, v] : shape(region, spacing)) out["shape_" + n] = v;
    std::vector<double> values;
    for (const auto& v : region) values.push_back(v.value);
    for (const auto& [n, v] : glcm(region, discretize(values, bins))) out["glcm_" + n] = v;
    return out;
}

}  // namespace radiomics_ref
