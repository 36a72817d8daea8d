#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "sparsemix/calibration.hpp"
#include "sparsemix/core.hpp"
#include "sparsemix/datagen.hpp"
#include "sparsemix/io.hpp"
#include "sparsemix/parallel.hpp"
#include "sparsemix/selection.hpp"
#include "sparsemix/statistics.hpp"

namespace sparsemix {

//---------------------------------------------------------------------------//
/*!
 * A statistic in an experiment. By default an s-dependent statistic runs at
 * the data's sparsity level; `id@k` pins it to level k (e.g. kurtosis@1 is
 * the coordinate-wise kurtosis at every data sparsity).
 */
struct StatSpec
{
    StatId id = StatId::top_eig;
    std::optional<Index> fixed_s;

    Index level_s(Index data_s) const { return fixed_s.value_or(data_s); }

    std::string label() const
    {
        std::string out(to_string(id));
        if (fixed_s)
            out += "@" + std::to_string(*fixed_s);
        return out;
    }

    static StatSpec parse(std::string_view text)
    {
        const std::string t = trim(std::string(text));
        StatSpec spec;
        const auto at = t.find('@');
        spec.id = parse_stat_id(t.substr(0, at));
        if (at != std::string::npos) {
            if (!uses_sparsity(spec.id))
                throw InvalidInput("statistic '" + t.substr(0, at) +
                                   "' does not depend on s; drop the @ suffix");
            const long long k = parse_integer(t.substr(at + 1));
            if (k < 1)
                throw InvalidInput("pinned sparsity must be >= 1 in '" + t + "'");
            spec.fixed_s = static_cast<Index>(k);
        }
        return spec;
    }

    bool operator==(const StatSpec&) const = default;
};

struct ExperimentConfig
{
    Index p = 50;
    Index n = 100;
    double nu = 0.5;
    std::vector<Index> sparsity{1};
    std::vector<double> amplitudes{0.0};  // A = |delta mu|, ascending
    std::vector<StatSpec> stats;
    std::vector<Estimator> estimators;    // for selection curves
    SymVariant sym_variant = SymVariant::normalized;
    int reps = 100;
    int calib_reps = 2000;
    double alpha = 0.05;
    std::uint64_t seed = 1;
    std::string sigma = "identity";  // see sigma_from_spec
    bool covariance_known = true;
    StatOptions options;             // options.s is set per cell
    unsigned threads = 1;
    std::string out_csv;
    std::string out_svg;

    void validate() const
    {
        if (p < 1 || n < 2)
            throw InvalidInput("experiment needs p >= 1 and n >= 2");
        if (!(nu > 0.0 && nu < 1.0))
            throw InvalidInput("nu must lie in (0, 1)");
        if (reps < 1)
            throw InvalidInput("reps must be >= 1");
        if (calib_reps < 100)
            throw InvalidInput("calib_reps must be >= 100");
        if (!(alpha > 0.0 && alpha < 1.0))
            throw InvalidInput("alpha must lie in (0, 1)");
        if (sparsity.empty())
            throw InvalidInput("sparsity list is empty");
        for (Index s : sparsity)
            if (s < 1 || s > p)
                throw InvalidInput("every sparsity level must lie in [1, p]");
        if (amplitudes.empty())
            throw InvalidInput("amplitude list is empty");
        for (std::size_t k = 0; k < amplitudes.size(); ++k) {
            if (!(amplitudes[k] >= 0.0) || !std::isfinite(amplitudes[k]))
                throw InvalidInput("amplitudes must be finite and nonnegative");
            if (k > 0 && !(amplitudes[k] > amplitudes[k - 1]))
                throw InvalidInput("amplitudes must be sorted strictly ascending");
        }
        if (stats.empty() && estimators.empty())
            throw InvalidInput("experiment lists neither statistics nor estimators");
        for (const auto& st : stats) {
            if (!covariance_known && requires_known_sigma(st.id))
                throw InvalidInput("statistic '" + st.label() +
                                   "' needs a known covariance; valid: " +
                                   unknown_sigma_statistics());
            if (st.fixed_s && *st.fixed_s > p)
                throw InvalidInput("pinned sparsity of '" + st.label() + "' exceeds p");
        }
        for (Estimator e : estimators)
            if (!covariance_known && (e == Estimator::spectral || e == Estimator::canonical))
                throw InvalidInput("estimator '" + std::string(to_string(e)) +
                                   "' needs a known covariance");
        options.search.validate();
    }
};

//---------------------------------------------------------------------------//
// Tables
//---------------------------------------------------------------------------//

struct PowerRow
{
    StatSpec stat;
    Index s = 1;
    double amplitude = 0.0;
    double rejection_frequency = 0.0;
    int reps = 0;
    double std_error = 0.0;  // sqrt(f (1 - f) / reps)
};

struct PowerTable
{
    std::vector<PowerRow> rows;
};

struct SelectionRow
{
    Estimator estimator = Estimator::spectral;
    Index s = 1;
    double amplitude = 0.0;
    double mean_error = 0.0;
    double std_error = 0.0;
    double exact_recovery = 0.0;
    int reps = 0;
};

struct SelectionTable
{
    std::vector<SelectionRow> rows;
};

//---------------------------------------------------------------------------//
// Calibration bookkeeping
//---------------------------------------------------------------------------//

/// Calibration keys a power or selection run needs, in a stable order.
inline std::vector<CalibrationKey> required_calibration(const ExperimentConfig& cfg)
{
    std::vector<CalibrationKey> keys;
    auto push = [&](const CalibrationKey& k) {
        for (const auto& e : keys)
            if (e.matches(k))
                return;
        keys.push_back(k);
    };
    for (const auto& st : cfg.stats)
        for (Index s : cfg.sparsity)
            push(CalibrationKey::make(st.id, cfg.n, cfg.p, st.level_s(s), cfg.alpha));
    for (Estimator e : cfg.estimators) {
        if (e == Estimator::coord_abs1)
            push(coord_bonferroni_key(MomentKind::abs1, cfg.n, cfg.p, cfg.alpha));
        if (e == Estimator::coord_signed2)
            push(coord_bonferroni_key(MomentKind::signed2, cfg.n, cfg.p, cfg.alpha));
    }
    return keys;
}

/// Throws MissingCalibration naming every missing key.
inline void check_calibration(const ExperimentConfig& cfg, const CalibrationTable& calib)
{
    std::string missing;
    for (const auto& k : required_calibration(cfg)) {
        if (calib.find(k))
            continue;
        if (!missing.empty())
            missing += "; ";
        missing += k.describe();
    }
    if (!missing.empty())
        throw MissingCalibration("missing calibration entries: " + missing +
                                 " (run `sparsemix calibrate` for each)");
}

/// Covariance of the experiment's null (delta mu = 0).
inline Matrix null_sigma(const ExperimentConfig& cfg)
{
    return sigma_from_spec(cfg.sigma, cfg.p, Vector::Zero(cfg.p));
}

/*!
 * Monte Carlo calibration of every key the experiment needs, at level
 * cfg.alpha. All statistics on (n, p) share the null datasets
 * null_dataset(n, p, seed, r), so an entry equals what `calibrate` gives for
 * the same seed. The null is N(0, Sigma_0) when the covariance is known and
 * N(0, I) otherwise.
 */
inline CalibrationTable calibrate_for(const ExperimentConfig& cfg, int reps, std::uint64_t seed)
{
    cfg.validate();
    if (reps < 100)
        throw InvalidInput("calibration needs at least 100 replications");
    std::optional<Matrix> known;
    if (cfg.covariance_known)
        known = null_sigma(cfg);
    const NullModel model(cfg.p, known);

    std::vector<CalibrationKey> keys;
    for (const auto& k : required_calibration(cfg))
        if (k.p == cfg.p)
            keys.push_back(k);

    // MDP keys share the lambda_max grid; everything else is computed per key.
    std::vector<std::size_t> mdp_slots;
    std::vector<Index> mdp_levels;
    for (std::size_t k = 0; k < keys.size(); ++k) {
        if (keys[k].stat == StatId::mdp) {
            mdp_slots.push_back(k);
            mdp_levels.push_back(keys[k].s);
        }
    }

    std::vector<std::vector<double>> values(keys.size(),
                                            std::vector<double>(static_cast<std::size_t>(reps)));
    parallel_for(static_cast<std::size_t>(reps), cfg.threads, [&](std::size_t r) {
        const Dataset d = null_dataset(cfg.n, cfg.p, seed, r, model.root_ptr());
        for (std::size_t k = 0; k < keys.size(); ++k) {
            if (keys[k].stat == StatId::mdp)
                continue;
            StatOptions opts = cfg.options;
            opts.s = keys[k].s;
            values[k][r] = compute_stat(keys[k].stat, d, &model.sigma, opts).value;
        }
        if (!mdp_slots.empty()) {
            const auto v = mdp_stat_values(d, model.sigma, mdp_levels, cfg.options.mdp);
            for (std::size_t m = 0; m < mdp_slots.size(); ++m)
                values[mdp_slots[m]][r] = v[m];
        }
    });

    CalibrationTable table;
    for (std::size_t k = 0; k < keys.size(); ++k) {
        CalibrationEntry e;
        e.key = keys[k];
        e.side = rejection_side(keys[k].stat);
        e.critical = critical_value(values[k], keys[k].level, e.side);
        e.reps = reps;
        e.seed = seed;
        table.add(e);
    }
    for (Estimator est : cfg.estimators) {
        if (est != Estimator::coord_abs1 && est != Estimator::coord_signed2)
            continue;
        const MomentKind kind =
            est == Estimator::coord_abs1 ? MomentKind::abs1 : MomentKind::signed2;
        CalibrationRequest req = coord_bonferroni_request(kind, cfg.n, cfg.p, cfg.alpha, reps, seed);
        req.threads = cfg.threads;
        table.add(calibrate(req));
    }
    return table;
}

//---------------------------------------------------------------------------//
// Experiments
//---------------------------------------------------------------------------//

namespace detail {

struct Cell
{
    Index s = 1;
    double amplitude = 0.0;
    Scenario scenario;
    Matrix root;
};

inline std::vector<Cell> make_cells(const ExperimentConfig& cfg)
{
    std::vector<Cell> cells;
    for (Index s : cfg.sparsity) {
        for (double a : cfg.amplitudes) {
            Cell c;
            c.s = s;
            c.amplitude = a;
            const Vector delta = paper_delta_mu(cfg.p, s, a);
            c.scenario.n = cfg.n;
            c.scenario.params.nu = cfg.nu;
            c.scenario.params.s = s;
            c.scenario.params.mu0 = Vector::Zero(cfg.p);
            c.scenario.params.mu1 = delta;
            c.scenario.params.sigma = sigma_from_spec(cfg.sigma, cfg.p, delta);
            c.scenario.params.validate();
            c.root = sampling_root(c.scenario.params.sigma);
            cells.push_back(std::move(c));
        }
    }
    return cells;
}

/// Dataset of replication r in cell (si, ai).
inline Dataset cell_dataset(const ExperimentConfig& cfg, const Cell& c, std::size_t si,
                            std::size_t ai, std::size_t r)
{
    const std::uint64_t seed = derive_seed(cfg.seed, {si, ai, r});
    return sample_mixture(c.scenario, seed, &c.root).data;
}

inline double binomial_se(double f, int reps)
{
    return std::sqrt(f * (1.0 - f) / static_cast<double>(reps));
}

}  // namespace detail

/*!
 * Rejection frequency of every statistic over cfg.reps datasets per
 * (s, A) cell; all statistics see the same datasets. Replication r of cell
 * (s_k, A_l) is drawn from derive_seed(seed, {k, l, r}).
 *
 * Rows are ordered by statistic, then s, then A.
 */
inline PowerTable run_power_curve(const ExperimentConfig& cfg, const CalibrationTable& calib)
{
    cfg.validate();
    check_calibration(cfg, calib);
    if (cfg.stats.empty())
        throw InvalidInput("power curve needs at least one statistic");
    const auto cells = detail::make_cells(cfg);
    const std::size_t na = cfg.amplitudes.size();
    const std::size_t nstat = cfg.stats.size();
    const auto reps = static_cast<std::size_t>(cfg.reps);

    std::vector<std::vector<double>> critical(nstat);
    for (std::size_t k = 0; k < nstat; ++k)
        for (Index s : cfg.sparsity)
            critical[k].push_back(calib.critical(
                CalibrationKey::make(cfg.stats[k].id, cfg.n, cfg.p,
                                     cfg.stats[k].level_s(s), cfg.alpha)));

    std::vector<unsigned char> rejected(cells.size() * reps * nstat, 0);
    parallel_for(cells.size() * reps, cfg.threads, [&](std::size_t task) {
        const std::size_t c = task / reps;
        const std::size_t r = task % reps;
        const std::size_t si = c / na;
        const std::size_t ai = c % na;
        const Dataset d = detail::cell_dataset(cfg, cells[c], si, ai, r);
        const Matrix* sigma = cfg.covariance_known ? &cells[c].scenario.params.sigma : nullptr;
        for (std::size_t k = 0; k < nstat; ++k) {
            StatOptions opts = cfg.options;
            opts.s = cfg.stats[k].level_s(cells[c].s);
            const StatValue v = compute_stat(cfg.stats[k].id, d, sigma, opts);
            rejected[task * nstat + k] = decide(v, critical[k][si]).rejected() ? 1 : 0;
        }
    });

    PowerTable table;
    for (std::size_t k = 0; k < nstat; ++k) {
        for (std::size_t c = 0; c < cells.size(); ++c) {
            std::size_t count = 0;
            for (std::size_t r = 0; r < reps; ++r)
                count += rejected[(c * reps + r) * nstat + k];
            PowerRow row;
            row.stat = cfg.stats[k];
            row.s = cells[c].s;
            row.amplitude = cells[c].amplitude;
            row.reps = cfg.reps;
            row.rejection_frequency = static_cast<double>(count) / static_cast<double>(reps);
            row.std_error = detail::binomial_se(row.rejection_frequency, cfg.reps);
            table.rows.push_back(row);
        }
    }
    return table;
}

/// Support estimate of one estimator on one dataset.
inline SupportEstimate estimate_support(Estimator e, const Dataset& d, const Matrix* sigma,
                                        Index s, const ExperimentConfig& cfg,
                                        const CalibrationTable& calib)
{
    switch (e) {
        case Estimator::spectral:
            if (!sigma)
                throw InvalidInput("spectral selection needs a known covariance");
            return select_spectral(d, *sigma, s, cfg.options.search);
        case Estimator::sym: return select_sym_moment(d, s, cfg.options.search, cfg.sym_variant);
        case Estimator::asym: return select_asym_moment(d, s, cfg.options.search);
        case Estimator::canonical:
            if (!sigma)
                throw InvalidInput("canonical selection needs a known covariance");
            return select_canonical(d, sigma->diagonal());
        case Estimator::coord_abs1:
            return select_coord_bonferroni(d, MomentKind::abs1, cfg.alpha, calib);
        case Estimator::coord_signed2:
            return select_coord_bonferroni(d, MomentKind::signed2, cfg.alpha, calib);
    }
    throw InvalidInput("unknown estimator");
}

/*!
 * Mean selection error |J_hat (+) J| / |J| against the planted support
 * J = {0, ..., s-1}, with its standard error and the exact-recovery
 * frequency, per (estimator, s, A). Datasets are those of run_power_curve.
 */
inline SelectionTable run_selection_curve(const ExperimentConfig& cfg,
                                          const CalibrationTable& calib = {})
{
    cfg.validate();
    if (cfg.estimators.empty())
        throw InvalidInput("selection curve needs at least one estimator");
    {
        ExperimentConfig only = cfg;
        only.stats.clear();
        check_calibration(only, calib);
    }
    const auto cells = detail::make_cells(cfg);
    const std::size_t na = cfg.amplitudes.size();
    const std::size_t ne = cfg.estimators.size();
    const auto reps = static_cast<std::size_t>(cfg.reps);

    std::vector<double> errors(cells.size() * reps * ne, 0.0);
    parallel_for(cells.size() * reps, cfg.threads, [&](std::size_t task) {
        const std::size_t c = task / reps;
        const std::size_t r = task % reps;
        const Dataset d = detail::cell_dataset(cfg, cells[c], c / na, c % na, r);
        const Matrix* sigma = cfg.covariance_known ? &cells[c].scenario.params.sigma : nullptr;
        Support truth(static_cast<std::size_t>(cells[c].s));
        for (Index j = 0; j < cells[c].s; ++j)
            truth[static_cast<std::size_t>(j)] = j;
        for (std::size_t k = 0; k < ne; ++k) {
            const auto est = estimate_support(cfg.estimators[k], d, sigma, cells[c].s, cfg, calib);
            errors[task * ne + k] = selection_error(est, truth);
        }
    });

    SelectionTable table;
    for (std::size_t k = 0; k < ne; ++k) {
        for (std::size_t c = 0; c < cells.size(); ++c) {
            double sum = 0.0;
            double exact = 0.0;
            for (std::size_t r = 0; r < reps; ++r) {
                const double e = errors[(c * reps + r) * ne + k];
                sum += e;
                exact += e == 0.0 ? 1.0 : 0.0;
            }
            const double mean = sum / static_cast<double>(reps);
            double ss = 0.0;
            for (std::size_t r = 0; r < reps; ++r) {
                const double dev = errors[(c * reps + r) * ne + k] - mean;
                ss += dev * dev;
            }
            SelectionRow row;
            row.estimator = cfg.estimators[k];
            row.s = cells[c].s;
            row.amplitude = cells[c].amplitude;
            row.mean_error = mean;
            row.std_error = reps > 1 ? std::sqrt(ss / static_cast<double>(reps - 1) /
                                                 static_cast<double>(reps))
                                     : 0.0;
            row.exact_recovery = exact / static_cast<double>(reps);
            row.reps = cfg.reps;
            table.rows.push_back(row);
        }
    }
    return table;
}

//---------------------------------------------------------------------------//
// CSV
//---------------------------------------------------------------------------//

inline constexpr const char* kPowerCsvHeader =
    "stat_id,s,amplitude,rejection_frequency,reps,std_error";
inline constexpr const char* kSelectionCsvHeader =
    "estimator,s,amplitude,mean_error,std_error,exact_recovery,reps";

inline void write_csv(std::ostream& out, const PowerTable& t)
{
    out << kPowerCsvHeader << '\n';
    for (const auto& r : t.rows)
        out << r.stat.label() << ',' << r.s << ',' << format_double(r.amplitude) << ','
            << format_double(r.rejection_frequency) << ',' << r.reps << ','
            << format_double(r.std_error) << '\n';
}

inline void write_csv(std::ostream& out, const SelectionTable& t)
{
    out << kSelectionCsvHeader << '\n';
    for (const auto& r : t.rows)
        out << to_string(r.estimator) << ',' << r.s << ',' << format_double(r.amplitude) << ','
            << format_double(r.mean_error) << ',' << format_double(r.std_error) << ','
            << format_double(r.exact_recovery) << ',' << r.reps << '\n';
}

namespace detail {

template <class Writer>
void write_file(const std::string& path, Writer&& w)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot open '" + path + "' for writing");
    w(out);
    out.flush();
    if (!out)
        throw IoError("failed writing '" + path + "'");
}

inline std::vector<std::vector<std::string>>
read_csv_rows(std::istream& in, const char* header, std::size_t fields)
{
    std::vector<std::vector<std::string>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line_no == 1) {
            if (line != header)
                throw InvalidInput(std::string("unexpected CSV header; expected ") + header);
            continue;
        }
        if (trim(line).empty())
            continue;
        auto f = split(line, ',');
        if (f.size() != fields)
            throw InvalidInput("CSV line " + std::to_string(line_no) + ": expected " +
                               std::to_string(fields) + " fields");
        rows.push_back(std::move(f));
    }
    return rows;
}

}  // namespace detail

inline void emit_csv(const PowerTable& t, const std::string& path)
{
    detail::write_file(path, [&](std::ostream& out) { write_csv(out, t); });
}

inline void emit_csv(const SelectionTable& t, const std::string& path)
{
    detail::write_file(path, [&](std::ostream& out) { write_csv(out, t); });
}

inline PowerTable read_power_csv(std::istream& in)
{
    PowerTable t;
    for (const auto& f : detail::read_csv_rows(in, kPowerCsvHeader, 6)) {
        PowerRow r;
        r.stat = StatSpec::parse(f[0]);
        r.s = static_cast<Index>(parse_integer(f[1]));
        r.amplitude = parse_double(f[2]);
        r.rejection_frequency = parse_double(f[3]);
        r.reps = static_cast<int>(parse_integer(f[4]));
        r.std_error = parse_double(f[5]);
        t.rows.push_back(r);
    }
    return t;
}

inline SelectionTable read_selection_csv(std::istream& in)
{
    SelectionTable t;
    for (const auto& f : detail::read_csv_rows(in, kSelectionCsvHeader, 7)) {
        SelectionRow r;
        r.estimator = parse_estimator(f[0]);
        r.s = static_cast<Index>(parse_integer(f[1]));
        r.amplitude = parse_double(f[2]);
        r.mean_error = parse_double(f[3]);
        r.std_error = parse_double(f[4]);
        r.exact_recovery = parse_double(f[5]);
        r.reps = static_cast<int>(parse_integer(f[6]));
        t.rows.push_back(r);
    }
    return t;
}

//---------------------------------------------------------------------------//
// SVG
//---------------------------------------------------------------------------//

namespace detail {

inline std::string svg_num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string tick_label(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

inline std::string xml_escape(const std::string& s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace detail

/*!
 * Static 800x600 power plot: x = A, y = rejection frequency on [0, 1], one
 * polyline per (statistic, s) series with a marker per point, and a legend.
 */
inline void write_svg(std::ostream& out, const PowerTable& t)
{
    constexpr double width = 800, height = 600;
    constexpr double left = 70, right = 590, top = 40, bottom = 540;
    static constexpr const char* palette[] = {"#d62728", "#2ca02c", "#1f77b4", "#c71585",
                                              "#ff7f0e", "#9467bd", "#8c564b", "#17becf",
                                              "#7f7f7f", "#bcbd22"};

    std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>> series;
    for (const auto& r : t.rows) {
        const std::string name = r.stat.label() + " s=" + std::to_string(r.s);
        auto it = std::find_if(series.begin(), series.end(),
                               [&](const auto& e) { return e.first == name; });
        if (it == series.end()) {
            series.push_back({name, {}});
            it = series.end() - 1;
        }
        it->second.emplace_back(r.amplitude, r.rejection_frequency);
    }

    double xmin = 0.0, xmax = 1.0;
    if (!t.rows.empty()) {
        xmin = xmax = t.rows.front().amplitude;
        for (const auto& r : t.rows) {
            xmin = std::min(xmin, r.amplitude);
            xmax = std::max(xmax, r.amplitude);
        }
        if (xmax == xmin) {
            xmin -= 1.0;
            xmax += 1.0;
        }
    }
    auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * (right - left); };
    auto py = [&](double y) { return bottom - std::clamp(y, 0.0, 1.0) * (bottom - top); };
    using detail::svg_num;

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<g stroke=\"#999\" stroke-width=\"1\" font-family=\"sans-serif\" font-size=\"12\">\n";
    for (int k = 0; k <= 5; ++k) {
        const double y = k / 5.0;
        out << "<line x1=\"" << svg_num(left) << "\" y1=\"" << svg_num(py(y)) << "\" x2=\""
            << svg_num(right) << "\" y2=\"" << svg_num(py(y)) << "\" stroke=\"#eee\"/>\n";
        out << "<text x=\"" << svg_num(left - 8) << "\" y=\"" << svg_num(py(y) + 4)
            << "\" text-anchor=\"end\" stroke=\"none\" fill=\"black\">"
            << detail::tick_label(y) << "</text>\n";
    }
    for (int k = 0; k <= 5; ++k) {
        const double x = xmin + (xmax - xmin) * k / 5.0;
        out << "<text x=\"" << svg_num(px(x)) << "\" y=\"" << svg_num(bottom + 18)
            << "\" text-anchor=\"middle\" stroke=\"none\" fill=\"black\">"
            << detail::tick_label(x) << "</text>\n";
    }
    out << "<rect x=\"" << svg_num(left) << "\" y=\"" << svg_num(top) << "\" width=\""
        << svg_num(right - left) << "\" height=\"" << svg_num(bottom - top)
        << "\" fill=\"none\" stroke=\"black\"/>\n";
    out << "<text x=\"" << svg_num((left + right) / 2) << "\" y=\"" << svg_num(bottom + 42)
        << "\" text-anchor=\"middle\" stroke=\"none\" fill=\"black\">A = |delta mu|</text>\n";
    out << "<text x=\"18\" y=\"" << svg_num((top + bottom) / 2)
        << "\" text-anchor=\"middle\" stroke=\"none\" fill=\"black\" transform=\"rotate(-90 18 "
        << svg_num((top + bottom) / 2) << ")\">rejection frequency</text>\n";
    out << "</g>\n";

    for (std::size_t k = 0; k < series.size(); ++k) {
        const char* color = palette[k % std::size(palette)];
        const auto& pts = series[k].second;
        if (pts.size() > 1) {
            out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
            for (std::size_t i = 0; i < pts.size(); ++i)
                out << (i ? " " : "") << svg_num(px(pts[i].first)) << ','
                    << svg_num(py(pts[i].second));
            out << "\"/>\n";
        }
        for (const auto& [x, y] : pts)
            out << "<circle cx=\"" << svg_num(px(x)) << "\" cy=\"" << svg_num(py(y))
                << "\" r=\"3\" fill=\"" << color << "\"/>\n";
        const double ly = top + 10 + 20.0 * static_cast<double>(k);
        out << "<line x1=\"610\" y1=\"" << svg_num(ly) << "\" x2=\"640\" y2=\"" << svg_num(ly)
            << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"648\" y=\"" << svg_num(ly + 4)
            << "\" font-family=\"sans-serif\" font-size=\"12\">"
            << detail::xml_escape(series[k].first) << "</text>\n";
    }
    out << "</svg>\n";
}

inline void emit_svg(const PowerTable& t, const std::string& path)
{
    detail::write_file(path, [&](std::ostream& out) { write_svg(out, t); });
}

//---------------------------------------------------------------------------//
// Presets and configuration files
//---------------------------------------------------------------------------//

inline std::vector<double> amplitude_grid(double step, int count)
{
    std::vector<double> a;
    for (int k = 0; k < count; ++k)
        a.push_back(step * k);
    return a;
}

inline const std::vector<std::string>& preset_names()
{
    static const std::vector<std::string> names{"paper-fig1", "paper-fig2", "small"};
    return names;
}

/*!
 * Named experiments.
 *   paper-fig1  p=500, n=200, nu=1/2, s in {1,5,10,30}, Sigma = I known:
 *               canonical, canonical-kth, top-eig, mdp
 *   paper-fig2  same design, Sigma treated as unknown for the moment tests:
 *               canonical (oracle benchmark), kurtosis@1, coord-abs1
 *   small       p=12, n=100, s in {1,2,3}: the sparse (enumerated) statistics
 * The amplitude grids are reconstructions (12 evenly spaced values).
 */
inline ExperimentConfig make_preset(const std::string& name)
{
    ExperimentConfig cfg;
    cfg.nu = 0.5;
    cfg.reps = 100;
    cfg.calib_reps = 2000;
    cfg.alpha = 0.05;
    auto stats = [](std::initializer_list<const char*> names) {
        std::vector<StatSpec> out;
        for (const char* n : names)
            out.push_back(StatSpec::parse(n));
        return out;
    };
    if (name == "paper-fig1") {
        cfg.p = 500;
        cfg.n = 200;
        cfg.sparsity = {1, 5, 10, 30};
        cfg.amplitudes = amplitude_grid(0.8, 12);
        cfg.stats = stats({"canonical", "canonical-kth", "top-eig", "mdp"});
    } else if (name == "paper-fig2") {
        cfg.p = 500;
        cfg.n = 200;
        cfg.sparsity = {1, 5, 10, 30};
        cfg.amplitudes = amplitude_grid(1.2, 12);
        cfg.stats = stats({"canonical", "kurtosis@1", "coord-abs1"});
    } else if (name == "small") {
        cfg.p = 12;
        cfg.n = 100;
        cfg.sparsity = {1, 2, 3};
        cfg.amplitudes = amplitude_grid(0.3, 12);
        cfg.stats = stats({"top-eig", "sparse-eig", "diag-ratio", "canonical", "mdp", "abs1",
                           "kurtosis", "skewness", "signed2"});
    } else {
        std::string valid;
        for (const auto& n : preset_names())
            valid += (valid.empty() ? "" : ", ") + n;
        throw InvalidInput("unknown preset '" + name + "'; valid: " + valid);
    }
    return cfg;
}

inline constexpr const char* kExperimentConfigHelp =
    "Experiment config keys (key = value, '#' comments):\n"
    "  preset          start from a named preset (paper-fig1, paper-fig2, small)\n"
    "  p, n            dimension and sample size\n"
    "  nu              mixing weight in (0,1) (default 0.5)\n"
    "  s               comma-separated sparsity levels\n"
    "  amplitudes      comma-separated ascending values of A = |delta mu|\n"
    "  stats           comma-separated statistic ids; id@k pins sparsity k\n"
    "  estimators      comma-separated estimators for selection curves\n"
    "  sym_variant     normalized | abs-sum\n"
    "  reps            replications per cell (default 100)\n"
    "  calib_reps      replications for calibration (default 2000)\n"
    "  alpha           test level (default 0.05)\n"
    "  seed            master seed\n"
    "  sigma           identity | diagonal:v1,v2,... | file:path.csv | deflated:c\n"
    "  covariance      known | unknown\n"
    "  mdp_grid        MDP grid points (default 200)\n"
    "  mdp_refine      MDP golden-section steps (default 20)\n"
    "  restarts        random restarts of the sparse search (default 8)\n"
    "  enumeration_cap maximum number of supports (default 200000)\n"
    "  threads         worker threads (0 = hardware)\n"
    "  out_csv, out_svg  output paths\n";

inline ExperimentConfig experiment_from_config(const KeyValueConfig& kv)
{
    static const std::set<std::string> known_keys{
        "preset",   "p",          "n",        "nu",         "s",          "amplitudes",
        "stats",    "estimators", "sym_variant", "reps",    "calib_reps", "alpha",
        "seed",     "sigma",      "covariance", "mdp_grid", "mdp_refine", "restarts",
        "enumeration_cap", "threads", "out_csv", "out_svg"};
    for (const auto& [k, v] : kv.values())
        if (!known_keys.count(k))
            throw InvalidInput("unknown config key '" + k + "'");

    ExperimentConfig cfg = kv.has("preset") ? make_preset(kv.get("preset")) : ExperimentConfig{};
    if (kv.has("p"))
        cfg.p = static_cast<Index>(kv.get_int("p"));
    if (kv.has("n"))
        cfg.n = static_cast<Index>(kv.get_int("n"));
    if (kv.has("nu"))
        cfg.nu = kv.get_double("nu");
    if (kv.has("s")) {
        cfg.sparsity.clear();
        for (const auto& f : split(kv.get("s"), ','))
            cfg.sparsity.push_back(static_cast<Index>(parse_integer(f)));
    }
    if (kv.has("amplitudes"))
        cfg.amplitudes = parse_double_list(kv.get("amplitudes"));
    if (kv.has("stats")) {
        cfg.stats.clear();
        for (const auto& f : split(kv.get("stats"), ','))
            cfg.stats.push_back(StatSpec::parse(f));
    }
    if (kv.has("estimators")) {
        cfg.estimators.clear();
        for (const auto& f : split(kv.get("estimators"), ','))
            cfg.estimators.push_back(parse_estimator(trim(f)));
    }
    if (kv.has("sym_variant")) {
        const std::string v = kv.get("sym_variant");
        if (v == "normalized")
            cfg.sym_variant = SymVariant::normalized;
        else if (v == "abs-sum")
            cfg.sym_variant = SymVariant::abs_sum;
        else
            throw InvalidInput("sym_variant must be normalized or abs-sum");
    }
    if (kv.has("reps"))
        cfg.reps = static_cast<int>(kv.get_int("reps"));
    if (kv.has("calib_reps"))
        cfg.calib_reps = static_cast<int>(kv.get_int("calib_reps"));
    if (kv.has("alpha"))
        cfg.alpha = kv.get_double("alpha");
    if (kv.has("seed"))
        cfg.seed = static_cast<std::uint64_t>(kv.get_int("seed"));
    if (kv.has("sigma"))
        cfg.sigma = kv.get("sigma");
    if (kv.has("covariance")) {
        const std::string v = kv.get("covariance");
        if (v != "known" && v != "unknown")
            throw InvalidInput("covariance must be known or unknown");
        cfg.covariance_known = v == "known";
    }
    if (kv.has("mdp_grid"))
        cfg.options.mdp.grid_points = static_cast<int>(kv.get_int("mdp_grid"));
    if (kv.has("mdp_refine"))
        cfg.options.mdp.refine_steps = static_cast<int>(kv.get_int("mdp_refine"));
    if (kv.has("restarts"))
        cfg.options.search.restarts = static_cast<int>(kv.get_int("restarts"));
    if (kv.has("enumeration_cap"))
        cfg.options.search.enumeration_cap =
            static_cast<std::uint64_t>(kv.get_int("enumeration_cap"));
    if (kv.has("threads"))
        cfg.threads = static_cast<unsigned>(kv.get_int("threads"));
    if (kv.has("out_csv"))
        cfg.out_csv = kv.get("out_csv");
    if (kv.has("out_svg"))
        cfg.out_svg = kv.get("out_svg");
    cfg.validate();
    return cfg;
}

}  // namespace sparsemix
