#pragma once

#include "swv/core_field.hpp"
#include "swv/shapes.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace swv {

namespace constants {
inline constexpr double mu0 = 1.25663706212e-6;       // T m / A
inline constexpr double bohr_magneton = 9.2740100783e-24;  // J / T
inline constexpr double hbar = 1.054571817e-34;       // J s
}  // namespace constants

struct MaterialParams {
    double ms = 730e3;     // A/m
    double alpha = 0.008;
    double aex = 13e-12;   // J/m
    double g_factor = 2.12;

    // Gyromagnetic ratio in rad / (s T).
    double gamma() const noexcept { return g_factor * constants::bohr_magneton / constants::hbar; }
    void validate() const;
};

struct ExcitationParams {
    double b_static = 0.087;        // mu0*H, tesla
    Vec3 static_dir{0.0, 1.0, 0.0};  // in-plane unit vector
    double f_mw = 9.4e9;            // Hz
    double h_mw = 1e-3;             // out-of-plane drive amplitude, tesla
    int periods_recorded = 50;
    int frames_per_period = 20;

    double period() const noexcept { return 1.0 / f_mw; }
    int frame_count() const noexcept { return periods_recorded * frames_per_period; }
    void validate() const;
};

struct SimConfig {
    GridSpec grid;
    ShapeMask mask;
    MaterialParams material;
    ExcitationParams excitation;
    double dt = 0.0;                 // 0 selects min(T_MW/400, stability cap)
    double relax_tolerance = 1e-4;   // tesla
    long relax_max_steps = 400000;
    double relax_alpha = 1.0;
    bool exchange = true;
    bool local_demag = true;
    // Long-range in-plane magnetostatic field of every cell prism (FFT convolution).
    bool inplane_demag = true;

    // Config for one preset shape on the given grid.
    static SimConfig for_shape(ShapeKind kind, const GridSpec& grid = {});

    double dt_cap() const;
    double effective_dt() const;
    void validate() const;
};

// Geometric factors of a uniformly charged rectangular face (length face_length in-plane,
// height thickness, centered at z = 0) seen from a point at normal offset a, tangential
// offset b and height z. The field is sigma / (4 pi) * (normal * n + tangential * e).
struct FaceKernel {
    double normal = 0.0;
    double tangential = 0.0;
};
FaceKernel face_kernel(double a, double b, double face_length, double thickness, double z = 0.0);

// In-plane demag tensor: field (in units of Ms) at offset (x, y, z) from a uniformly
// magnetized dx*dy*thickness prism centered at the origin.
struct PrismTensor {
    double xx = 0.0;
    double xy = 0.0;
    double yy = 0.0;
};
PrismTensor prism_tensor(double x, double y, double dx, double dy, double thickness, double z = 0.0);
// prism_tensor averaged over a whole target cell offset by (x, y); the solver kernel.
// Symmetric (xy == yx) and even in the offset.
PrismTensor cell_averaged_tensor(double x, double y, const GridSpec& grid);

// Uniform grid scaled for desk-scale runs: nx, ny shrink by `scale`, cells grow by 1/scale.
GridSpec scaled_grid(double scale);

// H_eff in A/m: static Zeeman + MW drive + exchange + local thin-film demag + in-plane demag.
VectorField effective_field(const VectorField& m, const SimConfig& cfg, double t);

// dm/dt in 1/s for a unit vector m in the field h_eff (A/m).
Vec3 llg_rhs(const Vec3& m, const Vec3& h_eff, const MaterialParams& material);

// One RK4 step of length cfg.effective_dt() followed by renormalization.
VectorField step(const VectorField& state, const SimConfig& cfg, double t);

// Energy in joules (Zeeman + exchange + local demag + in-plane demag).
double total_energy(const VectorField& m, const SimConfig& cfg);

struct RelaxResult {
    VectorField state;
    long steps = 0;
    double max_torque = 0.0;           // tesla
    std::vector<double> energy_trace;  // sampled every `energy_interval` steps
};

struct RelaxOptions {
    std::optional<VectorField> initial;
    long energy_interval = 0;  // 0 disables sampling
    long check_interval = 10;
};

RelaxResult relax_detailed(const SimConfig& cfg, const RelaxOptions& options = {});
VectorField relax(const SimConfig& cfg);

struct ExcitationRun {
    ScalarFieldSeries series;
    std::vector<double> frame_times;
    VectorField relaxed;
    long relax_steps = 0;
    long steps = 0;
};

using ProgressFn = std::function<void(int frame, int total)>;

ExcitationRun run_excitation_detailed(const SimConfig& cfg, const ProgressFn& progress = {});
ScalarFieldSeries run_excitation(const SimConfig& cfg);

// Phase of each material cell's m_z Fourier component at the drive frequency over the last
// `periods` periods, with frame k taken at phase k / frames_per_period. Cells with zero
// amplitude are skipped.
struct PhaseStats {
    double circular_std = 0.0;  // sqrt(-2 ln R), R = |mean unit phasor|; radians
    double mean_phase = 0.0;
    std::size_t cells = 0;
};
PhaseStats steady_phase_stats(const ScalarFieldSeries& series, const ShapeMask& mask, int frames_per_period,
                              int periods);

// Evolution engine for one configuration. Holds precomputed neighbor tables and the
// transformed demag kernel so repeated steps avoid setup cost.
class LlgSolver {
public:
    explicit LlgSolver(const SimConfig& cfg);
    ~LlgSolver();
    LlgSolver(LlgSolver&&) noexcept;
    LlgSolver& operator=(LlgSolver&&) noexcept;

    const SimConfig& config() const noexcept;

    VectorField initial_state() const;
    std::vector<Vec3> compact(const VectorField& field) const;
    VectorField expand(const std::vector<Vec3>& cells) const;

    // Field in tesla for every material cell; `drive` scales the MW term.
    void field(const std::vector<Vec3>& m, double t, double drive, std::vector<Vec3>& b) const;
    void rhs(const std::vector<Vec3>& m, double t, double drive, double alpha, std::vector<Vec3>& dmdt) const;
    // Returns false if the state became non-finite.
    bool rk4(std::vector<Vec3>& m, double t, double dt, double drive, double alpha);
    double max_torque(const std::vector<Vec3>& m, double t, double drive) const;
    double energy(const std::vector<Vec3>& m) const;

    // In-plane demag field (tesla) at every material cell.
    std::vector<Vec3> inplane_field(const std::vector<Vec3>& m) const;

    std::size_t cell_count() const noexcept;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace swv
