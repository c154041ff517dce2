#ifndef FRACHEAT_ASYMPTOTICS_HPP
#define FRACHEAT_ASYMPTOTICS_HPP

#include "fracheat/functionals.hpp"
#include "fracheat/geometry.hpp"
#include "fracheat/stable_kernel.hpp"

#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fracheat {

/// Strictly decreasing, positive times.
class t_grid {
public:
    explicit t_grid(std::vector<double> values);
    static t_grid logarithmic(double t_min, double t_max, int count);
    /// `min:max:count:log` or `min:max:count:lin`
    static t_grid parse(const std::string& spec);

    const std::vector<double>& values() const noexcept { return _values; }
    double t_max() const noexcept { return _values.front(); }
    double t_min() const noexcept { return _values.back(); }
    std::size_t size() const noexcept { return _values.size(); }

private:
    std::vector<double> _values;
};

/// A theorem hypothesis on the grid or the parameters is violated.
class hypothesis_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class correction_kind {
    /// values = L + c t^gamma
    power,
    /// values = L + c / ln(1/t)
    inverse_log,
};

struct correction_model {
    correction_kind kind = correction_kind::power;
    double gamma = 1.0;
};

struct fit_result {
    double limit = 0.0;
    double std_error = 0.0;
    double slope = 0.0;
    bool ill_conditioned = false;
    /// the regression was replaced by a two-point Richardson step
    bool richardson = false;
};

/// Weighted least squares of values against (1, basis(t)); zero errors get equal weights.
fit_result fit_limit(std::span<const double> times, std::span<const double> values, std::span<const double> errors,
                     const correction_model& model);

struct ratio_row {
    std::string check;
    double t = 0.0;
    double ratio = 0.0;
    double std_error = 0.0;
    /// bound minus measured quantity; >= -3 sigma passes
    double bound_margin = 0.0;
    double margin_std_error = 0.0;
    bool pass = true;
};

struct cross_check {
    std::string name;
    double value = 0.0;
    double reference = 0.0;
    double std_error = 0.0;
    bool pass = true;
};

struct theorem_report {
    std::string theorem_id;
    std::vector<double> grid;
    std::vector<ratio_row> rows;
    fit_result fit;
    double paper_constant = 0.0;
    double tolerance = 0.0;
    /// lim sup claim: only fitted <= constant is asserted
    bool one_sided = false;
    bool fitted = true;
    std::vector<cross_check> checks;
    std::vector<std::string> notes;
    bool verdict = false;

    bool inequalities_hold() const;
};

struct verify_config {
    functional_config functional;
    /// relative tolerance on the fitted limit; <= 0 selects the default for the theorem
    double tolerance = 0.0;
    /// upward shift of H in units of its standard error, for audit self-tests
    double inject_heat_shift = 0.0;
};

/// |Omega| - H <= t^(1/alpha) Gamma(1 - 1/alpha) Per / pi and the limit of the ratio, 1 < alpha <= 2.
theorem_report verify_hc_a(const shape& s, double alpha, const t_grid& grid, const verify_config& cfg);
/// alpha = 1 bound lambda t + Per/pi t ln(1/t) and the one-sided lim sup.
theorem_report verify_hc_b(const shape& s, const t_grid& grid, const verify_config& cfg);
/// (|Omega| - H) / t -> beta P_alpha for 0 < alpha < 1.
theorem_report verify_hc_c(const shape& s, double alpha, const t_grid& grid, const verify_config& cfg);
/// (Psi + t(t/2 - 1)|Omega|) / t^(2 + 1/alpha) -> c*_alpha Per for 1 < alpha <= 2.
theorem_report verify_main_i(const shape& s, double alpha, const t_grid& grid, const verify_config& cfg);
/// alpha = 1 bound gamma_d t^3 + Per/(3! pi) t^3 ln(1/t) and the one-sided lim sup.
theorem_report verify_main_ii(const shape& s, const t_grid& grid, const verify_config& cfg);
/// (Psi + t(t/2 - 1)|Omega|) / t^3 -> (|Omega| + beta P_alpha) / 3! for 0 < alpha < 1.
theorem_report verify_main_iii(const shape& s, double alpha, const t_grid& grid, const verify_config& cfg);

/// Checks 0 <= H <= |Omega|, Q <= H, 0 <= Psi <= t|Omega|, t^k Q <= T^(k) <= t^k |Omega| and
/// e^{-t} T^(3)/3! <= R <= |Omega| t^3/3! at every grid point.
theorem_report inequality_audit(const shape& s, const stability_index& index, const t_grid& grid,
                                const verify_config& cfg);

/// gamma_d(Omega) = (|Omega| + lambda) / 3! + 5 Per / (36 pi).
double gamma_const(const shape& s);

/// Throws hypothesis_error unless 0 < t < min(diam, e^-1) on the whole grid.
void require_small_time_grid(const shape& s, const t_grid& grid);

/// Constant c with c^-1 m <= p_t(r) <= c m fitted over a fixed log grid of (t, r).
double fitted_kernel_constant(const stability_index& index);

void write_report_header(std::ostream& out);
void write_report_rows(std::ostream& out, const theorem_report& report);
void write_summary_header(std::ostream& out);
void write_summary_row(std::ostream& out, const theorem_report& report);

} // namespace fracheat

#endif
