#include "swv/simulate.hpp"

#include "swv/errors.hpp"

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <string>

namespace swv {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kBaseCell = 10e-9;
constexpr std::size_t kBaseNx = 500;
constexpr std::size_t kBaseNy = 150;
}  // namespace

void MaterialParams::validate() const {
    if (!(ms > 0.0) || !(alpha >= 0.0) || !(aex > 0.0) || !(g_factor > 0.0)) {
        throw ParameterError("material parameters Ms, Aex and g must be positive and alpha non-negative");
    }
}

void ExcitationParams::validate() const {
    if (!(f_mw > 0.0)) {
        throw ParameterError("f_mw must be positive");
    }
    if (frames_per_period < 2) {
        throw ParameterError("frames_per_period must be at least 2");
    }
    if (periods_recorded < 1) {
        throw ParameterError("periods_recorded must be at least 1");
    }
    if (!(b_static >= 0.0) || !(h_mw >= 0.0)) {
        throw ParameterError("field amplitudes must be non-negative");
    }
    if (std::abs(static_dir.z) > 1e-12 || std::abs(norm(static_dir) - 1.0) > 1e-9) {
        throw ParameterError("static field direction must be an in-plane unit vector");
    }
}

GridSpec scaled_grid(double scale) {
    if (!(scale > 0.0) || !std::isfinite(scale)) {
        throw ParameterError("scale must be positive");
    }
    GridSpec g;
    g.nx = static_cast<std::size_t>(std::llround(static_cast<double>(kBaseNx) * scale));
    g.ny = static_cast<std::size_t>(std::llround(static_cast<double>(kBaseNy) * scale));
    g.dx = kBaseCell / scale;
    g.dy = kBaseCell / scale;
    g.validate();
    return g;
}

SimConfig SimConfig::for_shape(ShapeKind kind, const GridSpec& grid) {
    SimConfig cfg;
    cfg.grid = grid;
    cfg.mask = rasterize_shape(default_params(kind), grid);
    return cfg;
}

double SimConfig::dt_cap() const {
    const double gamma = material.gamma();
    const double b_demag = constants::mu0 * material.ms;
    const double b_exchange = 8.0 * material.aex * (1.0 / (grid.dx * grid.dx) + 1.0 / (grid.dy * grid.dy)) / material.ms;
    return 0.25 / (gamma * (b_demag + b_exchange));
}

double SimConfig::effective_dt() const {
    if (dt > 0.0) {
        return dt;
    }
    return std::min(excitation.period() / 400.0, dt_cap());
}

void SimConfig::validate() const {
    grid.validate();
    material.validate();
    excitation.validate();
    if (mask.grid != grid || mask.inside.size() != grid.cells()) {
        throw ParameterError("mask grid does not match simulation grid");
    }
    if (mask.count() == 0) {
        throw ParameterError("mask has no material cells");
    }
    if (dt < 0.0 || !std::isfinite(dt)) {
        throw ParameterError("dt must be non-negative");
    }
    if (dt > 0.0) {
        if (dt > excitation.period() / 200.0 * (1.0 + 1e-12)) {
            throw ParameterError("dt exceeds T_MW/200");
        }
        if (dt > dt_cap() * (1.0 + 1e-12)) {
            throw ParameterError("dt exceeds the exchange stability bound " + std::to_string(dt_cap()));
        }
    }
    if (!(relax_tolerance > 0.0) || relax_max_steps < 0 || !(relax_alpha > 0.0)) {
        throw ParameterError("relaxation settings must be positive");
    }
}

FaceKernel face_kernel(double a, double b, double face_length, double thickness, double z) {
    const double v1 = b - 0.5 * face_length;
    const double v2 = b + 0.5 * face_length;
    // The face splits at the target height into two parts of heights c above and below.
    auto part = [&](double c) -> FaceKernel {
        if (c == 0.0) return {};
        auto corner = [&](double v) {
            const double r = std::sqrt(a * a + v * v + c * c);
            return std::atan(v * c / (a * r));
        };
        auto side = [&](double v) { return std::asinh(c / std::sqrt(a * a + v * v)); };
        return {corner(v2) - corner(v1), side(v1) - side(v2)};
    };
    const FaceKernel up = part(0.5 * thickness - z);
    const FaceKernel down = part(0.5 * thickness + z);
    return {up.normal + down.normal, up.tangential + down.tangential};
}

PrismTensor prism_tensor(double x, double y, double dx, double dy, double thickness, double z) {
    // Four side faces carry charge m . n; the top and bottom faces are left to the local term.
    const FaceKernel px = face_kernel(x - 0.5 * dx, y, dy, thickness, z);   // +x face, e = +y
    const FaceKernel mx = face_kernel(-x - 0.5 * dx, y, dy, thickness, z);  // -x face, e = +y
    const FaceKernel py = face_kernel(y - 0.5 * dy, x, dx, thickness, z);   // +y face, e = +x
    const FaceKernel my = face_kernel(-y - 0.5 * dy, x, dx, thickness, z);  // -y face, e = +x
    const double inv4pi = 1.0 / (4.0 * kPi);
    PrismTensor t;
    t.xx = inv4pi * (px.normal + mx.normal);
    t.xy = inv4pi * (px.tangential - mx.tangential);
    t.yy = inv4pi * (py.normal + my.normal);
    return t;
}

PrismTensor cell_averaged_tensor(double x, double y, const GridSpec& g) {
    // 4-point Gauss-Legendre per axis; the log singularities on shared faces are integrable.
    constexpr std::array<double, 4> node = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                                            0.8611363115940526};
    constexpr std::array<double, 4> weight = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                              0.3478548451374538};
    PrismTensor acc;
    for (std::size_t a = 0; a < 4; ++a) {
        for (std::size_t b = 0; b < 4; ++b) {
            for (std::size_t c = 0; c < 4; ++c) {
                const double w = 0.125 * weight[a] * weight[b] * weight[c];
                const PrismTensor t = prism_tensor(x + 0.5 * g.dx * node[a], y + 0.5 * g.dy * node[b], g.dx, g.dy,
                                                   g.thickness, 0.5 * g.thickness * node[c]);
                acc.xx += w * t.xx;
                acc.xy += w * t.xy;
                acc.yy += w * t.yy;
            }
        }
    }
    return acc;
}

Vec3 llg_rhs(const Vec3& m, const Vec3& h_eff, const MaterialParams& material) {
    const Vec3 b = h_eff * constants::mu0;
    const Vec3 mxb = cross(m, b);
    const Vec3 mxmxb = cross(m, mxb);
    const double pref = -material.gamma() / (1.0 + material.alpha * material.alpha);
    return pref * (mxb + material.alpha * mxmxb);
}

// Zero-padded FFT convolution of the in-plane magnetization with the prism tensor.
class InplaneDemag {
public:
    InplaneDemag(const GridSpec& g, double ms)
        : nx_(g.nx), ny_(g.ny), px_(smooth_size(2 * g.nx - 1)), py_(smooth_size(2 * g.ny - 1)) {
        const std::size_t real_n = px_ * py_;
        const std::size_t spec_n = py_ * (px_ / 2 + 1);
        real_ = fftw_alloc_real(real_n);
        for (auto& c : spec_) c = fftw_alloc_complex(spec_n);
        for (auto& k : kernel_) k.resize(spec_n);
        {
            std::lock_guard<std::mutex> lock(planner_mutex());
            forward_ = fftw_plan_dft_r2c_2d(static_cast<int>(py_), static_cast<int>(px_), real_, spec_[0],
                                            FFTW_ESTIMATE);
            inverse_ = fftw_plan_dft_c2r_2d(static_cast<int>(py_), static_cast<int>(px_), spec_[0], real_,
                                            FFTW_ESTIMATE);
        }
        // Tensor in tesla per unit m, wrapped so offset -k sits at index P - k.
        const double scale = constants::mu0 * ms / static_cast<double>(real_n);
        std::array<std::vector<double>, 3> taps;
        for (auto& t : taps) t.assign(real_n, 0.0);
        const long lx = static_cast<long>(nx_);
        const long ly = static_cast<long>(ny_);
        for (long j = -(ly - 1); j <= ly - 1; ++j) {
            for (long i = -(lx - 1); i <= lx - 1; ++i) {
                const PrismTensor t = cell_averaged_tensor(static_cast<double>(i) * g.dx,
                                                           static_cast<double>(j) * g.dy, g);
                const std::size_t wi = static_cast<std::size_t>(i < 0 ? i + static_cast<long>(px_) : i);
                const std::size_t wj = static_cast<std::size_t>(j < 0 ? j + static_cast<long>(py_) : j);
                const std::size_t n = wj * px_ + wi;
                taps[0][n] = scale * t.xx;
                taps[1][n] = scale * t.xy;
                taps[2][n] = scale * t.yy;
            }
        }
        for (std::size_t c = 0; c < 3; ++c) {
            std::copy(taps[c].begin(), taps[c].end(), real_);
            fftw_execute_dft_r2c(forward_, real_, spec_[0]);
            for (std::size_t n = 0; n < spec_n; ++n) kernel_[c][n] = {spec_[0][n][0], spec_[0][n][1]};
        }
    }

    ~InplaneDemag() {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(forward_);
        fftw_destroy_plan(inverse_);
        fftw_free(real_);
        for (auto& c : spec_) fftw_free(c);
    }

    InplaneDemag(const InplaneDemag&) = delete;
    InplaneDemag& operator=(const InplaneDemag&) = delete;

    // `cells` maps compact index to grid index; out receives (bx, by, 0) in tesla.
    void apply(const std::vector<Vec3>& m, const std::vector<std::size_t>& cells, std::vector<Vec3>& out) const {
        for (int comp = 0; comp < 2; ++comp) {
            std::fill(real_, real_ + px_ * py_, 0.0);
            for (std::size_t c = 0; c < cells.size(); ++c) {
                const std::size_t k = cells[c];
                real_[(k / nx_) * px_ + (k % nx_)] = comp == 0 ? m[c].x : m[c].y;
            }
            fftw_execute_dft_r2c(forward_, real_, spec_[comp]);
        }
        const std::size_t spec_n = py_ * (px_ / 2 + 1);
        for (std::size_t n = 0; n < spec_n; ++n) {
            const std::complex<double> mx(spec_[0][n][0], spec_[0][n][1]);
            const std::complex<double> my(spec_[1][n][0], spec_[1][n][1]);
            const std::complex<double> bx = kernel_[0][n] * mx + kernel_[1][n] * my;
            const std::complex<double> by = kernel_[1][n] * mx + kernel_[2][n] * my;
            spec_[0][n][0] = bx.real();
            spec_[0][n][1] = bx.imag();
            spec_[1][n][0] = by.real();
            spec_[1][n][1] = by.imag();
        }
        out.resize(cells.size());
        for (int comp = 0; comp < 2; ++comp) {
            fftw_execute_dft_c2r(inverse_, spec_[comp], real_);
            for (std::size_t c = 0; c < cells.size(); ++c) {
                const std::size_t k = cells[c];
                const double v = real_[(k / nx_) * px_ + (k % nx_)];
                if (comp == 0) {
                    out[c] = {v, 0.0, 0.0};
                } else {
                    out[c].y = v;
                }
            }
        }
    }

private:
    // Smallest 2^a 3^b 5^c not below n.
    static std::size_t smooth_size(std::size_t n) {
        for (std::size_t s = std::max<std::size_t>(n, 1);; ++s) {
            std::size_t r = s;
            for (std::size_t p : {2, 3, 5}) {
                while (r % p == 0) r /= p;
            }
            if (r == 1) return s;
        }
    }

    static std::mutex& planner_mutex() {
        static std::mutex m;
        return m;
    }

    std::size_t nx_, ny_, px_, py_;
    double* real_ = nullptr;
    std::array<fftw_complex*, 2> spec_{};
    std::array<std::vector<std::complex<double>>, 3> kernel_;
    fftw_plan forward_ = nullptr;
    fftw_plan inverse_ = nullptr;
};

struct LlgSolver::Impl {
    SimConfig cfg;
    std::vector<std::size_t> cell_index;  // compact -> grid index
    std::vector<long> compact_of;         // grid index -> compact or -1
    std::vector<std::array<std::size_t, 4>> nbr;  // +x, -x, +y, -y (self when outside)
    double inv_dx2 = 0.0;
    double inv_dy2 = 0.0;
    Vec3 b_static;
    double exch_coef = 0.0;   // 2 Aex / Ms, T m^2
    double demag_coef = 0.0;  // mu0 Ms, T
    double gamma = 0.0;
    double omega = 0.0;
    double cell_volume = 0.0;
    std::unique_ptr<InplaneDemag> demag;

    // Scratch for RK4.
    std::vector<Vec3> k1, k2, k3, k4, tmp;

    explicit Impl(const SimConfig& c) : cfg(c) {
        cfg.validate();
        const auto& g = cfg.grid;
        compact_of.assign(g.cells(), -1);
        for (std::size_t k = 0; k < g.cells(); ++k) {
            if (cfg.mask.inside[k]) {
                compact_of[k] = static_cast<long>(cell_index.size());
                cell_index.push_back(k);
            }
        }
        nbr.resize(cell_index.size());
        for (std::size_t c = 0; c < cell_index.size(); ++c) {
            const std::size_t k = cell_index[c];
            const std::size_t i = k % g.nx;
            const std::size_t j = k / g.nx;
            auto pick = [&](bool ok, std::size_t ii, std::size_t jj) -> std::size_t {
                if (!ok) return c;
                const long n = compact_of[g.index(ii, jj)];
                return n < 0 ? c : static_cast<std::size_t>(n);
            };
            nbr[c] = {pick(i + 1 < g.nx, i + 1, j), pick(i > 0, i - 1, j), pick(j + 1 < g.ny, i, j + 1),
                      pick(j > 0, i, j - 1)};
        }
        inv_dx2 = 1.0 / (g.dx * g.dx);
        inv_dy2 = 1.0 / (g.dy * g.dy);
        b_static = cfg.excitation.static_dir * cfg.excitation.b_static;
        exch_coef = cfg.exchange ? 2.0 * cfg.material.aex / cfg.material.ms : 0.0;
        demag_coef = cfg.local_demag ? constants::mu0 * cfg.material.ms : 0.0;
        gamma = cfg.material.gamma();
        omega = 2.0 * kPi * cfg.excitation.f_mw;
        cell_volume = g.dx * g.dy * g.thickness;
        if (cfg.inplane_demag) {
            demag = std::make_unique<InplaneDemag>(g, cfg.material.ms);
        }
        const std::size_t n = cell_index.size();
        k1.resize(n);
        k2.resize(n);
        k3.resize(n);
        k4.resize(n);
        tmp.resize(n);
    }

    std::vector<Vec3> inplane_field(const std::vector<Vec3>& m) const {
        std::vector<Vec3> out(m.size());
        if (demag) demag->apply(m, cell_index, out);
        return out;
    }

    void field(const std::vector<Vec3>& m, double t, double drive, std::vector<Vec3>& b) const {
        const std::size_t n = m.size();
        const double bz_drive = drive != 0.0 ? drive * cfg.excitation.h_mw * std::sin(omega * t) : 0.0;
        if (demag) {
            demag->apply(m, cell_index, b);
        } else {
            b.assign(n, Vec3{});
        }
        for (std::size_t c = 0; c < n; ++c) {
            const auto& nb = nbr[c];
            const Vec3& mc = m[c];
            const Vec3 lap = (m[nb[0]] + m[nb[1]] - 2.0 * mc) * inv_dx2 + (m[nb[2]] + m[nb[3]] - 2.0 * mc) * inv_dy2;
            Vec3& out = b[c];
            out += b_static + exch_coef * lap;
            out.z += bz_drive - demag_coef * mc.z;
        }
    }

    void rhs(const std::vector<Vec3>& m, double t, double drive, double alpha, std::vector<Vec3>& out) const {
        field(m, t, drive, out);
        const double pref = -gamma / (1.0 + alpha * alpha);
        for (std::size_t c = 0; c < m.size(); ++c) {
            const Vec3 mxb = cross(m[c], out[c]);
            const Vec3 mxmxb = cross(m[c], mxb);
            out[c] = pref * (mxb + alpha * mxmxb);
        }
    }

    bool rk4(std::vector<Vec3>& m, double t, double dt, double drive, double alpha) {
        const std::size_t n = m.size();
        rhs(m, t, drive, alpha, k1);
        for (std::size_t c = 0; c < n; ++c) tmp[c] = m[c] + (0.5 * dt) * k1[c];
        rhs(tmp, t + 0.5 * dt, drive, alpha, k2);
        for (std::size_t c = 0; c < n; ++c) tmp[c] = m[c] + (0.5 * dt) * k2[c];
        rhs(tmp, t + 0.5 * dt, drive, alpha, k3);
        for (std::size_t c = 0; c < n; ++c) tmp[c] = m[c] + dt * k3[c];
        rhs(tmp, t + dt, drive, alpha, k4);
        bool finite = true;
        const double w = dt / 6.0;
        for (std::size_t c = 0; c < n; ++c) {
            Vec3 v = m[c] + w * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
            const double len = norm(v);
            if (!std::isfinite(len) || len == 0.0) {
                finite = false;
                continue;
            }
            m[c] = v * (1.0 / len);
        }
        return finite;
    }

    double max_torque(const std::vector<Vec3>& m, double t, double drive) const {
        std::vector<Vec3> b;
        field(m, t, drive, b);
        double worst = 0.0;
        for (std::size_t c = 0; c < m.size(); ++c) {
            worst = std::max(worst, norm(cross(m[c], b[c])));
        }
        return worst;
    }

    double energy(const std::vector<Vec3>& m) const {
        const double ms = cfg.material.ms;
        double zeeman = 0.0;
        double demag_local = 0.0;
        double demag_inplane = 0.0;
        double exch = 0.0;
        const std::vector<Vec3> bd = inplane_field(m);
        for (std::size_t c = 0; c < m.size(); ++c) {
            zeeman -= ms * dot(m[c], b_static);
            demag_inplane -= 0.5 * ms * dot(m[c], bd[c]);
            demag_local += 0.5 * ms * demag_coef * m[c].z * m[c].z;
            // Each bond counted once, from its +x / +y end.
            if (cfg.exchange) {
                if (nbr[c][0] != c) {
                    const Vec3 d = m[nbr[c][0]] - m[c];
                    exch += cfg.material.aex * dot(d, d) * inv_dx2;
                }
                if (nbr[c][2] != c) {
                    const Vec3 d = m[nbr[c][2]] - m[c];
                    exch += cfg.material.aex * dot(d, d) * inv_dy2;
                }
            }
        }
        return cell_volume * (zeeman + demag_local + demag_inplane + exch);
    }
};

LlgSolver::LlgSolver(const SimConfig& cfg) : impl_(std::make_unique<Impl>(cfg)) {}
LlgSolver::~LlgSolver() = default;
LlgSolver::LlgSolver(LlgSolver&&) noexcept = default;
LlgSolver& LlgSolver::operator=(LlgSolver&&) noexcept = default;

const SimConfig& LlgSolver::config() const noexcept { return impl_->cfg; }
std::size_t LlgSolver::cell_count() const noexcept { return impl_->cell_index.size(); }

VectorField LlgSolver::initial_state() const {
    VectorField f(impl_->cfg.grid);
    for (std::size_t k : impl_->cell_index) {
        f.m[k] = impl_->cfg.excitation.static_dir;
    }
    return f;
}

std::vector<Vec3> LlgSolver::compact(const VectorField& field) const {
    if (field.grid != impl_->cfg.grid || field.m.size() != impl_->cfg.grid.cells()) {
        throw InputError("vector field grid does not match solver grid");
    }
    std::vector<Vec3> out(impl_->cell_index.size());
    for (std::size_t c = 0; c < out.size(); ++c) {
        out[c] = field.m[impl_->cell_index[c]];
    }
    return out;
}

VectorField LlgSolver::expand(const std::vector<Vec3>& cells) const {
    VectorField f(impl_->cfg.grid);
    for (std::size_t c = 0; c < cells.size(); ++c) {
        f.m[impl_->cell_index[c]] = cells[c];
    }
    return f;
}

void LlgSolver::field(const std::vector<Vec3>& m, double t, double drive, std::vector<Vec3>& b) const {
    impl_->field(m, t, drive, b);
}

void LlgSolver::rhs(const std::vector<Vec3>& m, double t, double drive, double alpha, std::vector<Vec3>& dmdt) const {
    impl_->rhs(m, t, drive, alpha, dmdt);
}

bool LlgSolver::rk4(std::vector<Vec3>& m, double t, double dt, double drive, double alpha) {
    return impl_->rk4(m, t, dt, drive, alpha);
}

double LlgSolver::max_torque(const std::vector<Vec3>& m, double t, double drive) const {
    return impl_->max_torque(m, t, drive);
}

double LlgSolver::energy(const std::vector<Vec3>& m) const { return impl_->energy(m); }

std::vector<Vec3> LlgSolver::inplane_field(const std::vector<Vec3>& m) const { return impl_->inplane_field(m); }

VectorField effective_field(const VectorField& m, const SimConfig& cfg, double t) {
    LlgSolver solver(cfg);
    const auto cells = solver.compact(m);
    std::vector<Vec3> b;
    solver.field(cells, t, 1.0, b);
    for (auto& v : b) {
        v *= 1.0 / constants::mu0;
    }
    return solver.expand(b);
}

VectorField step(const VectorField& state, const SimConfig& cfg, double t) {
    LlgSolver solver(cfg);
    auto cells = solver.compact(state);
    if (!solver.rk4(cells, t, cfg.effective_dt(), 1.0, cfg.material.alpha)) {
        throw IntegrationError("non-finite magnetization at step 0", 0);
    }
    return solver.expand(cells);
}

double total_energy(const VectorField& m, const SimConfig& cfg) {
    LlgSolver solver(cfg);
    const auto cells = solver.compact(m);
    return solver.energy(cells);
}

namespace {

struct RelaxOutcome {
    std::vector<Vec3> state;
    long steps = 0;
    double torque = 0.0;
    std::vector<double> energies;
};

RelaxOutcome relax_with(LlgSolver& solver, std::vector<Vec3> m, const RelaxOptions& options) {
    const SimConfig& cfg = solver.config();
    const double dt = cfg.effective_dt();
    const long check = std::max(1L, options.check_interval);
    RelaxOutcome out;
    auto sample = [&] {
        if (options.energy_interval > 0 && out.steps % options.energy_interval == 0) {
            out.energies.push_back(solver.energy(m));
        }
    };
    sample();
    while (true) {
        out.torque = solver.max_torque(m, 0.0, 0.0);
        if (out.torque < cfg.relax_tolerance) {
            break;
        }
        if (out.steps >= cfg.relax_max_steps) {
            throw RelaxationError("relaxation did not converge within " + std::to_string(cfg.relax_max_steps) +
                                  " steps (max torque " + std::to_string(out.torque) + " T)");
        }
        for (long s = 0; s < check; ++s) {
            if (!solver.rk4(m, 0.0, dt, 0.0, cfg.relax_alpha)) {
                throw IntegrationError("non-finite magnetization during relaxation at step " +
                                           std::to_string(out.steps),
                                       out.steps);
            }
            ++out.steps;
            sample();
        }
    }
    out.state = std::move(m);
    return out;
}

}  // namespace

RelaxResult relax_detailed(const SimConfig& cfg, const RelaxOptions& options) {
    LlgSolver solver(cfg);
    auto start = solver.compact(options.initial ? *options.initial : solver.initial_state());
    auto out = relax_with(solver, std::move(start), options);
    RelaxResult r;
    r.state = solver.expand(out.state);
    r.steps = out.steps;
    r.max_torque = out.torque;
    r.energy_trace = std::move(out.energies);
    return r;
}

VectorField relax(const SimConfig& cfg) { return relax_detailed(cfg).state; }

ExcitationRun run_excitation_detailed(const SimConfig& cfg, const ProgressFn& progress) {
    LlgSolver solver(cfg);
    const auto& ex = cfg.excitation;
    auto relaxed = relax_with(solver, solver.compact(solver.initial_state()), {});
    std::vector<Vec3> m = relaxed.state;

    const double frame_interval = ex.period() / ex.frames_per_period;
    const double target_dt = cfg.effective_dt();
    const long steps_per_frame = std::max(1L, static_cast<long>(std::ceil(frame_interval / target_dt - 1e-9)));
    const double dt = frame_interval / static_cast<double>(steps_per_frame);
    const int total = ex.frame_count();

    ExcitationRun run;
    run.relaxed = solver.expand(m);
    run.relax_steps = relaxed.steps;
    run.series.grid = cfg.grid;
    run.series.frame_dt = frame_interval;
    run.series.frame_rate_playback = ex.frames_per_period / 2.0;
    run.series.frames.reserve(static_cast<std::size_t>(total));
    run.frame_times.reserve(static_cast<std::size_t>(total));

    run.series.frames.push_back(run.relaxed.mz());
    run.frame_times.push_back(0.0);
    long step_index = 0;
    for (int k = 1; k < total; ++k) {
        for (long s = 0; s < steps_per_frame; ++s) {
            const double t = static_cast<double>(step_index) * dt;
            if (!solver.rk4(m, t, dt, 1.0, cfg.material.alpha)) {
                throw IntegrationError("non-finite magnetization at step " + std::to_string(step_index), step_index);
            }
            ++step_index;
        }
        run.series.frames.push_back(solver.expand(m).mz());
        run.frame_times.push_back(static_cast<double>(step_index) * dt);
        if (progress) {
            progress(k + 1, total);
        }
    }
    run.steps = step_index;
    return run;
}

ScalarFieldSeries run_excitation(const SimConfig& cfg) { return run_excitation_detailed(cfg).series; }

PhaseStats steady_phase_stats(const ScalarFieldSeries& series, const ShapeMask& mask, int frames_per_period,
                              int periods) {
    if (frames_per_period < 2 || periods < 1) {
        throw ParameterError("phase analysis needs frames_per_period >= 2 and periods >= 1");
    }
    const std::size_t window = static_cast<std::size_t>(frames_per_period) * static_cast<std::size_t>(periods);
    if (series.frames.size() < window) {
        throw InputError("series is shorter than the requested analysis window");
    }
    if (mask.inside.size() != series.grid.cells()) {
        throw InputError("mask does not match the series grid");
    }
    const std::size_t start = series.frames.size() - window;
    std::vector<std::complex<double>> basis(static_cast<std::size_t>(frames_per_period));
    for (std::size_t p = 0; p < basis.size(); ++p) {
        basis[p] = std::polar(1.0, -2.0 * kPi * static_cast<double>(p) / frames_per_period);
    }
    std::complex<double> sum = 0.0;
    PhaseStats out;
    for (std::size_t c = 0; c < mask.inside.size(); ++c) {
        if (!mask.inside[c]) continue;
        std::complex<double> a = 0.0;
        for (std::size_t k = start; k < series.frames.size(); ++k) {
            a += series.frames[k].values()[c] * basis[k % basis.size()];
        }
        const double amp = std::abs(a);
        if (amp == 0.0) continue;
        sum += a / amp;
        ++out.cells;
    }
    if (out.cells == 0) {
        throw InputError("no cell oscillates at the drive frequency");
    }
    const double r = std::min(1.0, std::abs(sum) / static_cast<double>(out.cells));
    out.circular_std = std::sqrt(-2.0 * std::log(r));
    out.mean_phase = std::arg(sum);
    return out;
}

}  // namespace swv
