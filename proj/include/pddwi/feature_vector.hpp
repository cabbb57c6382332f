#pragma once

// Ordered (name, value) pairs with unique names and finite values; the
// common currency between feature extractors and the feature matrix.

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pddwi {

class FeatureVector {
public:
    FeatureVector() = default;

    void push(std::string name, double value) {
        if (!std::isfinite(value))
            throw std::logic_error("FeatureVector: non-finite value for '" + name + "'");
        for (const auto& [n, v] : entries_)
            if (n == name) throw std::logic_error("FeatureVector: duplicate name '" + name + "'");
        entries_.emplace_back(std::move(name), value);
    }

    void append(const FeatureVector& other) {
        for (const auto& [n, v] : other.entries_) push(n, v);
    }

    double at(const std::string& name) const {
        for (const auto& [n, v] : entries_)
            if (n == name) return v;
        throw std::out_of_range("FeatureVector: no feature named '" + name + "'");
    }

    bool contains(const std::string& name) const {
        for (const auto& [n, v] : entries_)
            if (n == name) return true;
        return false;
    }

    std::size_t size() const { return entries_.size(); }
    const std::vector<std::pair<std::string, double>>& entries() const { return entries_; }

    bool operator==(const FeatureVector&) const = default;

private:
    std::vector<std::pair<std::string, double>> entries_;
};

}  // namespace pddwi
