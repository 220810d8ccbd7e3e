#pragma once

// Simplex algebra on D-part compositions: closure, perturbation, powering,
// the compositional center and variation matrix, and isometric log-ratio
// coordinates built from sequential binary partitions.

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hac24 {

using Labels = std::vector<std::string>;

/// sit, stand, step, sleep: the order every basis and table uses by default.
const Labels& canonical_behaviors();

/// Nonnegative durations (minutes/day) for each behavior.
class RawTimeVector {
public:
    RawTimeVector(std::vector<double> minutes, Labels labels);

    const std::vector<double>& minutes() const { return minutes_; }
    const Labels& labels() const { return labels_; }
    std::size_t size() const { return minutes_.size(); }
    double operator[](std::size_t i) const { return minutes_[i]; }
    double total() const;

    /// Every part multiplied by `factor` (> 0).
    RawTimeVector scaled(double factor) const;

private:
    std::vector<double> minutes_;
    Labels labels_;
};

/// A point on the open simplex: D >= 2 strictly positive parts summing to 1.
class Composition {
public:
    /// Closes `parts` once and validates the invariants. Throws DataError on
    /// any non-positive or non-finite part.
    Composition(std::vector<double> parts, Labels labels);
    Composition(std::vector<double> parts, std::shared_ptr<const Labels> labels);

    static Composition uniform(const Labels& labels);

    std::span<const double> parts() const { return parts_; }
    const Labels& labels() const { return *labels_; }
    const std::shared_ptr<const Labels>& labels_ptr() const { return labels_; }
    std::size_t size() const { return parts_.size(); }
    double operator[](std::size_t i) const { return parts_[i]; }

    /// Position of `label`; throws DataError when absent.
    std::size_t index_of(const std::string& label) const;

    bool same_labels(const Composition& other) const;

private:
    std::vector<double> parts_;
    std::shared_ptr<const Labels> labels_;
};

/// Rescale raw minutes to proportions. Zero parts are rejected: they have to
/// be resolved with replace_zeros first.
Composition closure(const RawTimeVector& raw);

/// x (+) y: closure of the componentwise product.
Composition perturb(const Composition& x, const Composition& y);

/// The change from x to y, y (-) x, so that perturb(x, result) == y.
Composition perturb_difference(const Composition& x, const Composition& y);

/// Perturbation inverse of x.
Composition inverse(const Composition& x);

/// a (x) x: closure of the componentwise a-th power.
Composition power(double a, const Composition& x);

/// Closure of the per-part geometric means (computed in log space).
Composition compositional_mean(std::span<const Composition> samples);

double aitchison_distance(const Composition& x, const Composition& y);

struct VariationMatrix {
    Labels labels;
    Eigen::MatrixXd entries;  // (i,j): sample SD of ln(x_i / x_j)
};

VariationMatrix variation_matrix(std::span<const Composition> samples);

/// Sequential binary partition: a (D-1) x D table of +1/-1/0 codes. Level 1
/// splits all parts; every later level splits exactly one existing group.
class SBPartition {
public:
    SBPartition(std::vector<std::vector<int>> signs, Labels labels);

    std::size_t parts() const { return labels_.size(); }
    std::size_t levels() const { return signs_.size(); }
    const Labels& labels() const { return labels_; }
    int sign(std::size_t level, std::size_t part) const { return signs_[level][part]; }
    const std::vector<std::vector<int>>& signs() const { return signs_; }

    /// r: parts coded +1 at `level`.
    std::size_t numerator_size(std::size_t level) const;
    /// s: parts coded -1 at `level`.
    std::size_t denominator_size(std::size_t level) const;

    /// D x (D-1) orthonormal contrast matrix V with ilr(x) = V^T ln(x).
    const Eigen::MatrixXd& contrasts() const { return contrasts_; }

    bool operator==(const SBPartition& other) const {
        return signs_ == other.signs_ && labels_ == other.labels_;
    }

private:
    std::vector<std::vector<int>> signs_;
    Labels labels_;
    Eigen::MatrixXd contrasts_;
};

/// Pivot basis: `numerator` first, then the remaining labels in their given
/// order, one part peeled off per level. Level k coordinate is
/// sqrt((D-k)/(D-k+1)) ln(part_k / gmean(rest)).
SBPartition pivot_basis(const std::string& numerator, const Labels& labels);

struct IlrVector {
    std::vector<double> coords;
    SBPartition basis;
};

IlrVector ilr(const Composition& x, const SBPartition& basis);
Composition ilr_inverse(const IlrVector& v);
Composition ilr_inverse(std::span<const double> coords, const SBPartition& basis);

/// Row i holds ilr(samples[i]).
Eigen::MatrixXd ilr_rows(std::span<const Composition> samples, const SBPartition& basis);

/// Zero handling for raw time vectors. Zeros become the floor; the positive
/// parts shrink proportionally so the vector total is unchanged.
struct ZeroReplacement {
    enum class Kind { FixedFloor, FractionOfMin };
    Kind kind = Kind::FixedFloor;
    double floor = 1.0;                  // FixedFloor: minutes
    std::vector<double> part_floors;     // FractionOfMin: one per behavior
};

ZeroReplacement fixed_floor(double minutes);

/// Floors at `fraction` x the smallest positive value seen for each behavior
/// across `cohort`.
ZeroReplacement fraction_of_min(std::span<const RawTimeVector> cohort, double fraction = 0.5);

RawTimeVector replace_zeros(const RawTimeVector& raw, const ZeroReplacement& strategy);

struct TernaryPoint {
    double u = 0.0;
    double v = 0.0;
};

/// Barycentric -> Cartesian in the unit triangle with vertices
/// part0 -> (0,0), part1 -> (1,0), part2 -> (1/2, sqrt(3)/2).
TernaryPoint ternary_coords(const Composition& x);

}  // namespace hac24
