// operator_core.hpp: density operators on labeled composite spaces: tensor
// products, partial traces, subsystem permutations, entropies and distances.
//
// All logarithms are base 2. Subsystem order is fixed at construction and
// every API refers to subsystems by index.

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace entflux {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Dims = std::vector<std::size_t>;

inline constexpr double kStateTolerance = 1e-10;
// Negative eigenvalues above this magnitude are a hard error.
inline constexpr double kClipLimit = 1e-8;
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

std::size_t product(std::span<const std::size_t> dims);

class DensityMatrix {
public:
    /// Validates hermiticity, unit trace and positivity (tolerance 1e-10)
    /// and throws std::invalid_argument on violation.
    DensityMatrix(CMatrix data, Dims dims, std::vector<std::string> labels = {});

    static DensityMatrix maximally_mixed(const Dims& dims);
    static DensityMatrix pure(const CVector& psi, Dims dims);
    /// |index><index| in the product computational basis.
    static DensityMatrix basis(const Dims& dims, std::size_t index);

    const CMatrix& data() const noexcept { return data_; }
    const Dims& dims() const noexcept { return dims_; }
    const std::vector<std::string>& labels() const noexcept { return labels_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(data_.rows()); }
    std::size_t subsystems() const noexcept { return dims_.size(); }

    /// Index of the subsystem carrying `label`; throws if absent.
    std::size_t index_of(const std::string& label) const;
    DensityMatrix with_labels(std::vector<std::string> labels) const;

    double purity() const;

private:
    CMatrix data_;
    Dims dims_;
    std::vector<std::string> labels_;
};

// Hermitian spectrum helpers. Eigenvalues in ascending order.
Eigen::VectorXd hermitian_eigenvalues(const CMatrix& m);

DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b);
CMatrix kron(const CMatrix& a, const CMatrix& b);

/// Keeps the listed subsystems (in original order) and traces out the rest.
DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const std::size_t> keep);

/// Reorders subsystems: new subsystem k is old subsystem `order[k]`.
DensityMatrix permute(const DensityMatrix& rho, std::span<const std::size_t> order);

/// Row-index map for a subsystem permutation on raw matrices; entry i is the
/// old flat index of new flat index i.
std::vector<std::size_t> permutation_index_map(const Dims& dims,
                                               std::span<const std::size_t> order);

/// U rho U^dagger where U acts on `targets` (in the given order) and
/// identity elsewhere. Subsystem layout is unchanged.
DensityMatrix apply_unitary(const DensityMatrix& rho, const CMatrix& u,
                            std::span<const std::size_t> targets);

/// Embeds an operator acting on `targets` into the full space of `dims`.
CMatrix embed_operator(const CMatrix& op, const Dims& dims,
                       std::span<const std::size_t> targets);

double von_neumann_entropy(const DensityMatrix& rho);
/// Entropy of a probability vector in bits (0 log 0 = 0).
double shannon_entropy(std::span<const double> probs);
double binary_entropy(double p);

/// S(rho||sigma) in bits; kInfinity when supp(rho) is not inside supp(sigma).
double relative_entropy(const DensityMatrix& rho, const DensityMatrix& sigma);

double trace_distance(const DensityMatrix& rho, const DensityMatrix& sigma);

/// Projects a Hermitian, trace-one matrix onto the state set by clipping
/// negative eigenvalues no larger than kClipLimit; throws beyond that.
CMatrix clip_to_state(const CMatrix& m);

}  // namespace entflux
