#pragma once
// Concrete closed-system models: a number-conserving exchange chain with
// cell-partitioned conserved quantities, discrete continuity and entropy-
// growth experiments, a system-environment record model, and a 1-D wave
// packet evolved against its classical trajectory.

#include <functional>
#include <vector>

#include "decohist/decoherence.hpp"
#include "decohist/hilbert.hpp"
#include "decohist/histories.hpp"
#include "decohist/maxent.hpp"

namespace decohist {

// Qubit chain with nearest-neighbor exchange and an on-site field,
//   H = sum_b J (|01><10| + |10><01|)_(b,b+1) + h sum_i n_i,
// the XX exchange written in hopping form. Site 0 is the most significant
// tensor factor, so the basis index of a product state reads like the
// occupation pattern. The exchange moves excitations without creating them,
// hence [H, N] = 0 for the total occupation N (checked at construction).
class SpinChainModel {
public:
    SpinChainModel(int sites, double exchange, double field);

    int sites() const { return sites_; }
    Index dim() const { return Index(1) << sites_; }
    double exchange() const { return exchange_; }
    double field() const { return field_; }

    const HermitianOperator& hamiltonian() const { return h_; }
    const HermitianOperator& number_operator() const { return n_; }

    // Field term of one site plus half of every bond touching it; these tile
    // the Hamiltonian, sum_i site_energy(i) = H.
    HermitianOperator site_energy(int site) const;
    HermitianOperator site_occupation(int site) const;
    // Full exchange term of bond b (sites b and b+1).
    HermitianOperator bond_operator(int bond) const;

    // |bits[0] bits[1] ... bits[L-1]> with bits[i] in {0, 1}.
    StateVector basis_product_state(const std::vector<int>& bits) const;

private:
    int sites_;
    double exchange_, field_;
    HermitianOperator h_, n_;
};

// Contiguous blocks of cell_size sites. Boundary bonds are split evenly
// between the two cells they touch, so the cell energies tile the chain
// Hamiltonian exactly and the cell occupations tile N. The model must
// outlive the partition.
class CellPartition {
public:
    CellPartition(const SpinChainModel& model, int cell_size);

    int cells() const { return static_cast<int>(energies_.size()); }
    int cell_size() const { return cell_size_; }
    const SpinChainModel& model() const { return *model_; }

    const HermitianOperator& cell_energy(int cell) const;
    const HermitianOperator& cell_occupation(int cell) const;

    // Constraint bundles (energy + occupation, local dimension 2^cell_size)
    // for the entropy solvers.
    std::vector<CellOperators> cell_constraints() const;

private:
    const SpinChainModel* model_;
    int cell_size_;
    std::vector<HermitianOperator> energies_, occupations_;
};

enum class ChainQuantity { energy, number };

// d<Q_y>/dt from the Heisenberg commutator against the matching sum of
// boundary-flux expectations; gap is their absolute difference, an exact
// operator identity up to roundoff.
struct ContinuityReport {
    double rate = 0.0;      // <i[H, Q_y]>
    double flux_sum = 0.0;  // fluxes through the cell's boundaries, inward
    double gap = 0.0;       // |rate - flux_sum|
};

ContinuityReport continuity_check(const CellPartition& partition, const DensityMatrix& rho,
                                  ChainQuantity quantity, int cell);

// Relative variance (<A^2> - <A>^2) / <A>^2 of a cell quantity; undefined
// (contract_violation) when the mean vanishes.
double fluctuation_ratio(const CellPartition& partition, const DensityMatrix& rho,
                         ChainQuantity quantity, int cell);

struct SecondLawRow {
    double t = 0.0;
    double entropy_local = 0.0;        // max entropy given all cell constraints
    double entropy_equilibrium = 0.0;  // ceiling from total <H>, <N> alone
    double defect = 0.0;               // constraint residual of the local solve
};

// Evolves |psi0> under the chain Hamiltonian (exact eigendecomposition) and
// solves the cell-constrained maximum-entropy problem at every requested
// time. The equilibrium ceiling is solved once from the conserved totals;
// every row is checked against it (entropy_local <= ceiling + 1e-8) and any
// violation or solver failure aborts naming the offending time. Time points
// are independent and run on `threads` workers.
std::vector<SecondLawRow> second_law_experiment(const CellPartition& partition,
                                                const StateVector& psi0,
                                                const std::vector<double>& times,
                                                double epsilon = 1e-10, int threads = 1);

// One interaction step between an s-dimensional system in a uniform
// superposition and n_env register qubits that each rotate by (system index)
// * theta, i.e. a controlled rotation writing a redundant record of the
// system alternative into every register qubit. The returned two-time
// history set follows the system alone: its own basis before the step and
// the conjugate (discrete Fourier) basis carried through the step. The
// report's off-diagonal defect equals the record-overlap product
// max_d |cos(d theta)|^n_env exactly.
struct EnvironmentDecoherence {
    HistorySet histories;
    DecoherenceReport report;
};

EnvironmentDecoherence environment_decoherence_model(
    Index system_dim, int n_env, double theta,
    double epsilon = default_decoherence_epsilon);

// Closed form of the same defect, usable far beyond the matrix size cap.
double environment_defect_prediction(Index system_dim, int n_env, double theta);

// One-dimensional particle on a uniform grid with hard-wall ends: symmetric
// second-difference kinetic term, potential sampled at the grid points.
class WavePacketModel {
public:
    WavePacketModel(Index grid_points, double x_min, double x_max, double mass,
                    std::function<double(double)> potential);

    Index dim() const { return grid_; }
    double spacing() const { return spacing_; }
    double position(Index k) const;
    double mass() const { return mass_; }
    double potential_at(double x) const { return potential_(x); }
    const HermitianOperator& hamiltonian() const { return h_; }

    // Normalized Gaussian exp(-(x - x0)^2 / (4 width^2) + i p0 x) on the
    // grid; the width must cover at least three grid spacings to keep the
    // second difference a faithful Laplacian.
    StateVector gaussian_packet(double x0, double p0, double width) const;

private:
    Index grid_;
    double x_min_, spacing_, mass_;
    std::function<double(double)> potential_;
    HermitianOperator h_;
};

struct EhrenfestRow {
    double t = 0.0;
    double x_mean = 0.0;       // <x> of the evolved packet
    double x_classical = 0.0;  // adaptive integration of m x'' = -V'(x)
    double spread = 0.0;       // sqrt(<x^2> - <x>^2)
};

// Quantum mean position of the packet versus the classical trajectory from
// the same initial conditions. Times must be finite, nonnegative and
// strictly increasing. If the evolved packet ever puts more than 1e-6 of its
// probability on the outermost two grid points of either wall, the grid has
// been outgrown and the run aborts naming the offending time.
std::vector<EhrenfestRow> ehrenfest_experiment(const WavePacketModel& model, double x0,
                                               double p0, double width,
                                               const std::vector<double>& times);

}  // namespace decohist
