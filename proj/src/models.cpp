#include "decohist/models.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "decohist/errors.hpp"
#include "decohist/parallel.hpp"

namespace decohist {

namespace {

constexpr int max_chain_sites = 12;              // exact-diagonalization budget
constexpr Index max_model_dim = Index{1} << 12;  // environment model / grid cap

Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

// I_(2^left) (x) block (x) I_(2^(sites - left - width)), with the block
// covering `width` adjacent sites starting at `left`.
Matrix embed(int sites, int left, const Matrix& block) {
    const int width = static_cast<int>(std::countr_zero(
        static_cast<unsigned long long>(block.rows())));  // block dim = 2^width
    const Index l = Index{1} << left;
    const Index r = Index{1} << (sites - left - width);
    return kron(kron(Matrix::Identity(l, l), block), Matrix::Identity(r, r));
}

Matrix occupation_local() {
    Matrix n = Matrix::Zero(2, 2);
    n(1, 1) = 1.0;
    return n;
}

// J (|01><10| + |10><01|): the XX exchange (J/2)(XX + YY) in hopping form.
Matrix exchange_local(double j) {
    Matrix b = Matrix::Zero(4, 4);
    b(1, 2) = j;
    b(2, 1) = j;
    return b;
}

// Field term of the site plus half of every bond touching it; summing these
// over all sites in site order rebuilds H with the same accumulation order
// the cell energies use, so the tiling checks stay at roundoff level.
Matrix site_energy_matrix(int sites, int site, double exchange, double field) {
    Matrix e = field * embed(sites, site, occupation_local());
    if (site > 0) e += 0.5 * embed(sites, site - 1, exchange_local(exchange));
    if (site + 1 < sites) e += 0.5 * embed(sites, site, exchange_local(exchange));
    return e;
}

int checked_sites(int sites, double exchange, double field) {
    if (sites < 1) throw contract_violation("models: the chain needs at least one site");
    if (sites > max_chain_sites)
        throw cap_exceeded("models: chains beyond " + std::to_string(max_chain_sites) +
                           " sites exceed the exact-diagonalization budget");
    if (!std::isfinite(exchange) || !std::isfinite(field))
        throw contract_violation("models: exchange and field must be finite");
    return sites;
}

Matrix chain_hamiltonian(int sites, double exchange, double field) {
    const Index d = Index{1} << sites;
    Matrix h = Matrix::Zero(d, d);
    for (int i = 0; i < sites; ++i) h += site_energy_matrix(sites, i, exchange, field);
    return h;
}

Matrix chain_number(int sites) {
    const Index d = Index{1} << sites;
    Matrix n = Matrix::Zero(d, d);
    for (int i = 0; i < sites; ++i) n += embed(sites, i, occupation_local());
    return n;
}

}  // namespace

// -------------------------------------------------------------- spin chains

SpinChainModel::SpinChainModel(int sites, double exchange, double field)
    : sites_(checked_sites(sites, exchange, field)),
      exchange_(exchange),
      field_(field),
      h_(HermitianOperator::trusted(chain_hamiltonian(sites_, exchange, field))),
      n_(HermitianOperator::trusted(chain_number(sites_))) {
    if (max_abs(i_commutator(h_, n_).matrix()) > 1e-12)
        throw numerical_failure("models: the chain failed its number-conservation check");
}

HermitianOperator SpinChainModel::site_energy(int site) const {
    if (site < 0 || site >= sites_)
        throw contract_violation("models: site index out of range");
    return HermitianOperator::trusted(site_energy_matrix(sites_, site, exchange_, field_));
}

HermitianOperator SpinChainModel::site_occupation(int site) const {
    if (site < 0 || site >= sites_)
        throw contract_violation("models: site index out of range");
    return HermitianOperator::trusted(embed(sites_, site, occupation_local()));
}

HermitianOperator SpinChainModel::bond_operator(int bond) const {
    if (bond < 0 || bond + 1 >= sites_)
        throw contract_violation("models: bond index out of range");
    return HermitianOperator::trusted(embed(sites_, bond, exchange_local(exchange_)));
}

StateVector SpinChainModel::basis_product_state(const std::vector<int>& bits) const {
    if (static_cast<int>(bits.size()) != sites_)
        throw contract_violation("models: exactly one bit per site required");
    Index index = 0;
    for (int i = 0; i < sites_; ++i) {
        if (bits[static_cast<std::size_t>(i)] != 0 && bits[static_cast<std::size_t>(i)] != 1)
            throw contract_violation("models: product-state bits must be 0 or 1");
        index |= static_cast<Index>(bits[static_cast<std::size_t>(i)]) << (sites_ - 1 - i);
    }
    return StateVector::basis_state(dim(), index);
}

// ---------------------------------------------------------- cell partitions

CellPartition::CellPartition(const SpinChainModel& model, int cell_size)
    : model_(&model), cell_size_(cell_size) {
    if (cell_size < 1) throw contract_violation("models: cells need at least one site");
    if (model.sites() % cell_size != 0)
        throw contract_violation("models: the cell size must divide the number of sites");
    const int n_cells = model.sites() / cell_size;
    const Index d = model.dim();
    for (int y = 0; y < n_cells; ++y) {
        Matrix e = Matrix::Zero(d, d);
        Matrix oc = Matrix::Zero(d, d);
        for (int i = y * cell_size; i < (y + 1) * cell_size; ++i) {
            e += model.site_energy(i).matrix();
            oc += model.site_occupation(i).matrix();
        }
        energies_.push_back(HermitianOperator::trusted(std::move(e)));
        occupations_.push_back(HermitianOperator::trusted(std::move(oc)));
    }
    Matrix energy_sum = Matrix::Zero(d, d);
    Matrix occupation_sum = Matrix::Zero(d, d);
    for (int y = 0; y < n_cells; ++y) {
        energy_sum += energies_[static_cast<std::size_t>(y)].matrix();
        occupation_sum += occupations_[static_cast<std::size_t>(y)].matrix();
    }
    if (max_abs(energy_sum - model.hamiltonian().matrix()) > 1e-13 ||
        max_abs(occupation_sum - model.number_operator().matrix()) > 1e-13)
        throw numerical_failure("models: cell operators failed to tile the chain totals");
}

const HermitianOperator& CellPartition::cell_energy(int cell) const {
    if (cell < 0 || cell >= cells())
        throw contract_violation("models: cell index out of range");
    return energies_[static_cast<std::size_t>(cell)];
}

const HermitianOperator& CellPartition::cell_occupation(int cell) const {
    if (cell < 0 || cell >= cells())
        throw contract_violation("models: cell index out of range");
    return occupations_[static_cast<std::size_t>(cell)];
}

std::vector<CellOperators> CellPartition::cell_constraints() const {
    std::vector<CellOperators> out;
    out.reserve(energies_.size());
    for (std::size_t y = 0; y < energies_.size(); ++y)
        out.push_back(CellOperators{energies_[y], {}, occupations_[y],
                                    Index{1} << cell_size_});
    return out;
}

// ------------------------------------------------- conservation experiments

ContinuityReport continuity_check(const CellPartition& partition, const DensityMatrix& rho,
                                  ChainQuantity quantity, int cell) {
    const SpinChainModel& model = partition.model();
    if (cell < 0 || cell >= partition.cells())
        throw contract_violation("models: cell index out of range");
    if (rho.dim() != model.dim())
        throw contract_violation("models: state dimension does not match the model");
    const bool energy = quantity == ChainQuantity::energy;
    // A one-site cell's energy shares its boundary bonds with both neighbors
    // at once; the two-term flux decomposition below needs the half-bonds of
    // distinct boundaries to act on disjoint sites.
    if (energy && partition.cell_size() == 1 && partition.cells() > 1)
        throw contract_violation(
            "models: the energy flux decomposition needs cells of at least two sites");
    const HermitianOperator& q =
        energy ? partition.cell_energy(cell) : partition.cell_occupation(cell);

    ContinuityReport report;
    report.rate = expectation(i_commutator(model.hamiltonian(), q), rho);
    // Everything in H that fails to commute with the cell quantity lives at
    // the two cell boundaries: the neighbor cell energies (for energy) or the
    // straddling exchange bonds (for occupation).
    const int v = partition.cell_size();
    double flux = 0.0;
    if (cell > 0) {
        const HermitianOperator left = energy ? partition.cell_energy(cell - 1)
                                              : model.bond_operator(cell * v - 1);
        flux += expectation(i_commutator(left, q), rho);
    }
    if (cell + 1 < partition.cells()) {
        const HermitianOperator right = energy ? partition.cell_energy(cell + 1)
                                               : model.bond_operator((cell + 1) * v - 1);
        flux += expectation(i_commutator(right, q), rho);
    }
    report.flux_sum = flux;
    report.gap = std::abs(report.rate - report.flux_sum);
    return report;
}

double fluctuation_ratio(const CellPartition& partition, const DensityMatrix& rho,
                         ChainQuantity quantity, int cell) {
    if (cell < 0 || cell >= partition.cells())
        throw contract_violation("models: cell index out of range");
    if (rho.dim() != partition.model().dim())
        throw contract_violation("models: state dimension does not match the model");
    const HermitianOperator& a = quantity == ChainQuantity::energy
                                     ? partition.cell_energy(cell)
                                     : partition.cell_occupation(cell);
    const double mean = expectation(a, rho);
    if (std::abs(mean) <= 1e-12)
        throw contract_violation("models: the relative fluctuation is undefined at zero mean");
    const double second =
        expectation(HermitianOperator::trusted(a.matrix() * a.matrix()), rho);
    return (second - mean * mean) / (mean * mean);
}

std::vector<SecondLawRow> second_law_experiment(const CellPartition& partition,
                                                const StateVector& psi0,
                                                const std::vector<double>& times,
                                                double epsilon, int threads) {
    const SpinChainModel& model = partition.model();
    if (psi0.dim() != model.dim())
        throw contract_violation("models: initial state dimension does not match the model");
    if (!(epsilon > 0.0) || !std::isfinite(epsilon))
        throw contract_violation("models: epsilon must be positive and finite");
    for (double t : times)
        if (!std::isfinite(t)) throw contract_violation("models: times must be finite");
    if (times.empty()) return {};

    MaxEntOptions opts;
    opts.tol = epsilon;

    std::vector<HermitianOperator> constraints;
    constraints.reserve(2 * static_cast<std::size_t>(partition.cells()));
    for (int y = 0; y < partition.cells(); ++y) {
        constraints.push_back(partition.cell_energy(y));
        constraints.push_back(partition.cell_occupation(y));
    }
    const BoundaryReducedSolver solver(std::move(constraints), opts);

    const DensityMatrix rho0 = DensityMatrix::pure(psi0);
    const ReducedMaxEnt ceiling = missing_information_reduced(
        {model.hamiltonian(), model.number_operator()}, rho0, opts);

    const SpectralDecomposition sd = spectral_decompose(model.hamiltonian());
    const Vector coeffs = sd.eigenvectors.adjoint() * psi0.amplitudes();

    std::vector<SecondLawRow> rows(times.size());
    parallel_for(times.size(), threads, [&](std::size_t i) {
        const double t = times[i];
        const Vector phases =
            (sd.eigenvalues.cast<Complex>().array() * Complex(0.0, -t)).exp();
        const Vector psi_t = sd.eigenvectors * (phases.array() * coeffs.array()).matrix();
        if (std::abs(psi_t.squaredNorm() - 1.0) > 1e-9)
            throw numerical_failure("models: evolution lost unit norm at t = " +
                                    std::to_string(t));
        const DensityMatrix rho_t = DensityMatrix::pure(StateVector::normalized(psi_t));
        const ReducedMaxEnt local = [&] {
            try {
                return solver.solve(rho_t);
            } catch (const contract_violation&) {
                throw;  // caller-side mistakes keep their type
            } catch (const std::exception& err) {
                throw numerical_failure("models: entropy solve failed at t = " +
                                        std::to_string(t) + " (" + err.what() + ")");
            }
        }();
        if (local.entropy > ceiling.entropy + 1e-8)
            throw numerical_failure(
                "models: local entropy exceeded the equilibrium ceiling at t = " +
                std::to_string(t));
        rows[i] = SecondLawRow{t, local.entropy, ceiling.entropy, local.residual};
    });
    return rows;
}

// --------------------------------------------------------- record registers

EnvironmentDecoherence environment_decoherence_model(Index system_dim, int n_env,
                                                     double theta, double epsilon) {
    if (system_dim < 2)
        throw contract_violation("models: the system needs at least two alternatives");
    if (n_env < 0)
        throw contract_violation("models: the register size cannot be negative");
    if (!std::isfinite(theta)) throw contract_violation("models: theta must be finite");
    if (n_env >= 12 || system_dim > max_model_dim ||
        (Index{1} << n_env) > max_model_dim / system_dim)
        throw cap_exceeded("models: system_dim * 2^n_env exceeds the working cap");
    const Index env_dim = Index{1} << n_env;
    const Index dim = system_dim * env_dim;
    const double s = static_cast<double>(system_dim);

    // One interaction step: every register qubit rotates by (system index)
    // * theta, leaving per-alternative records with pairwise overlaps
    // cos((i - j) theta) per qubit. The step is block-diagonal over system
    // alternatives, so everything below is assembled per system block from the
    // record-overlap kernels R((j - i) theta)^(tensor n); forming the step as
    // one dense matrix would push the build to O(dim^3).
    std::vector<Matrix> record_overlap(static_cast<std::size_t>(system_dim));
    for (Index d = 0; d < system_dim; ++d) {
        const double phi = static_cast<double>(d) * theta;
        Matrix r(2, 2);
        r << std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi);
        Matrix block = Matrix::Identity(1, 1);
        for (int k = 0; k < n_env; ++k) block = kron(block, r);
        record_overlap[static_cast<std::size_t>(d)] = std::move(block);
    }

    // The system basis before the step: member i keeps system block i whole.
    // Exact by construction, so validation is skipped.
    std::vector<Projector> early_members;
    early_members.reserve(static_cast<std::size_t>(system_dim));
    for (Index i = 0; i < system_dim; ++i) {
        Matrix p = Matrix::Zero(dim, dim);
        p.block(i * env_dim, i * env_dim, env_dim, env_dim) =
            Matrix::Identity(env_dim, env_dim);
        early_members.push_back(trusted_projector(std::move(p), env_dim));
    }

    // The conjugate (discrete Fourier) system basis carried through the step.
    // Equal-time system projections always decohere trivially; the
    // interference between the recorded alternatives shows up in this two-time
    // combination, with off-diagonal strength exactly the record-overlap
    // product. Carrying the Fourier projector through the step turns system
    // block (i, j) into (1/s) w^{f(i-j)} R((j - i) theta)^(tensor n); the
    // lower triangle mirrors the upper, so hermiticity is exact.
    std::vector<Projector> late_members;
    late_members.reserve(static_cast<std::size_t>(system_dim));
    for (Index f = 0; f < system_dim; ++f) {
        Matrix q = Matrix::Zero(dim, dim);
        for (Index i = 0; i < system_dim; ++i) {
            q.block(i * env_dim, i * env_dim, env_dim, env_dim) =
                (1.0 / s) * Matrix::Identity(env_dim, env_dim);
            for (Index j = i + 1; j < system_dim; ++j) {
                const Matrix& overlap = record_overlap[static_cast<std::size_t>(j - i)];
                const Complex phase =
                    std::polar(1.0 / s, 2.0 * std::numbers::pi * static_cast<double>(f) *
                                            static_cast<double>(i - j) / s);
                q.block(i * env_dim, j * env_dim, env_dim, env_dim) = phase * overlap;
                q.block(j * env_dim, i * env_dim, env_dim, env_dim) =
                    std::conj(phase) * overlap.transpose();
            }
        }
        late_members.push_back(trusted_projector(std::move(q), env_dim));
    }

    auto early = std::make_shared<const ProjectorSet>(
        trusted_projector_set(std::move(early_members)));
    auto late = std::make_shared<const ProjectorSet>(
        trusted_projector_set(std::move(late_members)));
    HistorySet histories = HistorySet::product({0.0, 1.0}, {early, late});

    // Uniform system superposition with a blank register. Branch (i, f) is
    // Q_f P_i |psi> = Q_f column (i, blank) / sqrt(s), so the report reduces
    // to pairwise overlaps of s^2 stored columns, in the same depth-first
    // order the branch enumeration would visit.
    std::vector<HistoryLabel> labels;
    std::vector<Matrix> branches;
    labels.reserve(static_cast<std::size_t>(system_dim * system_dim));
    branches.reserve(static_cast<std::size_t>(system_dim * system_dim));
    for (Index i = 0; i < system_dim; ++i)
        for (Index f = 0; f < system_dim; ++f) {
            labels.push_back({i, f});
            branches.emplace_back((*late)[static_cast<std::size_t>(f)].matrix().col(
                                      i * env_dim) /
                                  std::sqrt(s));
        }
    DecoherenceReport report = report_from_branches(std::move(labels), branches, epsilon);
    return EnvironmentDecoherence{std::move(histories), std::move(report)};
}

double environment_defect_prediction(Index system_dim, int n_env, double theta) {
    if (system_dim < 2)
        throw contract_violation("models: the system needs at least two alternatives");
    if (n_env < 0)
        throw contract_violation("models: the register size cannot be negative");
    if (!std::isfinite(theta)) throw contract_violation("models: theta must be finite");
    double best = 0.0;
    for (Index d = 1; d < system_dim; ++d)
        best = std::max(best, std::pow(std::abs(std::cos(static_cast<double>(d) * theta)),
                                       static_cast<double>(n_env)));
    return best;
}

// --------------------------------------------------------------- wave packets

namespace {

Matrix grid_hamiltonian(Index grid, double x_min, double x_max, double mass,
                        const std::function<double(double)>& potential) {
    if (grid < 8) throw contract_violation("models: the grid needs at least eight points");
    if (grid > max_model_dim)
        throw cap_exceeded("models: grid size exceeds the working cap");
    if (!std::isfinite(x_min) || !std::isfinite(x_max) || !(x_max > x_min))
        throw contract_violation("models: the grid interval must be finite and ordered");
    if (!(mass > 0.0) || !std::isfinite(mass))
        throw contract_violation("models: the mass must be positive and finite");
    if (!potential) throw contract_violation("models: a potential function is required");
    const double a = (x_max - x_min) / static_cast<double>(grid - 1);
    const double k = 1.0 / (2.0 * mass * a * a);
    Matrix h = Matrix::Zero(grid, grid);
    for (Index g = 0; g < grid; ++g) {
        const double v = potential(x_min + static_cast<double>(g) * a);
        if (!std::isfinite(v))
            throw contract_violation("models: the potential must be finite on the grid");
        h(g, g) = 2.0 * k + v;
        if (g + 1 < grid) {
            h(g, g + 1) = -k;
            h(g + 1, g) = -k;
        }
    }
    return h;
}

// m x'' = -V'(x) from the same initial data as the packet, integrated
// adaptively; the force comes from a central difference of the model's own
// potential so analytic and sampled potentials are treated alike.
std::vector<double> classical_positions(const WavePacketModel& model, double x0, double p0,
                                        const std::vector<double>& times) {
    namespace ode = boost::numeric::odeint;
    using PhasePoint = std::array<double, 2>;  // position, momentum
    const double mass = model.mass();
    const auto force = [&model](double x) {
        const double delta = 1e-5 * std::max(1.0, std::abs(x));
        return -(model.potential_at(x + delta) - model.potential_at(x - delta)) /
               (2.0 * delta);
    };
    const auto rhs = [&](const PhasePoint& y, PhasePoint& dydt, double) {
        dydt[0] = y[1] / mass;
        dydt[1] = force(y[0]);
    };
    std::vector<double> sample_times;
    sample_times.reserve(times.size() + 1);
    if (times.front() > 0.0) sample_times.push_back(0.0);  // integration start
    sample_times.insert(sample_times.end(), times.begin(), times.end());

    PhasePoint y{x0, p0};
    std::vector<double> positions;
    positions.reserve(sample_times.size());
    auto stepper = ode::make_controlled(1e-12, 1e-12, ode::runge_kutta_dopri5<PhasePoint>());
    ode::integrate_times(stepper, rhs, y, sample_times.begin(), sample_times.end(), 1e-3,
                         [&positions](const PhasePoint& s, double) {
                             positions.push_back(s[0]);
                         });
    if (positions.size() == times.size() + 1) positions.erase(positions.begin());
    return positions;
}

}  // namespace

WavePacketModel::WavePacketModel(Index grid_points, double x_min, double x_max, double mass,
                                 std::function<double(double)> potential)
    : grid_(grid_points),
      x_min_(x_min),
      spacing_((x_max - x_min) / static_cast<double>(grid_points - 1)),
      mass_(mass),
      potential_(std::move(potential)),
      h_(HermitianOperator::trusted(
          grid_hamiltonian(grid_points, x_min, x_max, mass, potential_))) {}

double WavePacketModel::position(Index k) const {
    if (k < 0 || k >= grid_) throw contract_violation("models: grid index out of range");
    return x_min_ + static_cast<double>(k) * spacing_;
}

StateVector WavePacketModel::gaussian_packet(double x0, double p0, double width) const {
    if (!std::isfinite(x0) || !std::isfinite(p0) || !(width > 0.0) || !std::isfinite(width))
        throw contract_violation("models: packet parameters must be finite, width positive");
    if (width < 3.0 * spacing_)
        throw contract_violation(
            "models: the packet width must cover at least three grid spacings");
    Vector amp(grid_);
    for (Index g = 0; g < grid_; ++g) {
        const double x = position(g);
        amp(g) = std::polar(std::exp(-(x - x0) * (x - x0) / (4.0 * width * width)), p0 * x);
    }
    return StateVector::normalized(std::move(amp));
}

std::vector<EhrenfestRow> ehrenfest_experiment(const WavePacketModel& model, double x0,
                                               double p0, double width,
                                               const std::vector<double>& times) {
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!std::isfinite(times[i]) || times[i] < 0.0)
            throw contract_violation("models: times must be finite and nonnegative");
        if (i > 0 && times[i] <= times[i - 1])
            throw contract_violation("models: times must be strictly increasing");
    }
    const StateVector psi0 = model.gaussian_packet(x0, p0, width);
    if (times.empty()) return {};

    // The grid Hamiltonian is real symmetric; decompose it in real arithmetic.
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(model.hamiltonian().matrix().real());
    if (es.info() != Eigen::Success)
        throw numerical_failure("models: grid eigendecomposition failed");
    const RealVector w = es.eigenvalues();
    const Matrix basis = es.eigenvectors().cast<Complex>();
    const Vector coeffs = basis.adjoint() * psi0.amplitudes();

    const std::vector<double> classical = classical_positions(model, x0, p0, times);

    RealVector xs(model.dim());
    for (Index g = 0; g < model.dim(); ++g) xs(g) = model.position(g);

    std::vector<EhrenfestRow> rows(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double t = times[i];
        const Vector phases = (w.cast<Complex>().array() * Complex(0.0, -t)).exp();
        const Vector psi_t = basis * (phases.array() * coeffs.array()).matrix();
        const RealVector prob = psi_t.cwiseAbs2();
        if (std::abs(prob.sum() - 1.0) > 1e-9)
            throw numerical_failure("models: evolution lost unit norm at t = " +
                                    std::to_string(t));
        const Index last = model.dim() - 1;
        const double edge = prob(0) + prob(1) + prob(last - 1) + prob(last);
        if (edge > 1e-6)
            throw numerical_failure(
                "models: the packet was truncated at the grid boundary at t = " +
                std::to_string(t));
        const double mean = prob.dot(xs);
        const double second = prob.dot(xs.cwiseProduct(xs));
        rows[i] = EhrenfestRow{t, mean, classical[i],
                               std::sqrt(std::max(second - mean * mean, 0.0))};
    }
    return rows;
}

}  // namespace decohist
