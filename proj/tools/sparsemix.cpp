// Command-line front end: simulate, stat, select, calibrate, power, preset.
// Indices on the command line and in files are 1-based.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sparsemix/sparsemix.hpp"

namespace sm = sparsemix;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitMissingCalibration = 3;

json support_json(const sm::Support& s)
{
    json out = json::array();
    for (auto j : s)
        out.push_back(j + 1);
    return out;
}

json vector_json(const sm::Vector& v)
{
    json out = json::array();
    for (sm::Index j = 0; j < v.size(); ++j)
        out.push_back(v(j));
    return out;
}

// 1-based indices separated by commas, whitespace or newlines.
sm::Support read_truth(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw sm::IoError("cannot open truth file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    std::string text = buf.str();
    for (char& c : text)
        if (c == ',' || c == '\n' || c == '\r' || c == '\t')
            c = ' ';
    std::istringstream words(text);
    sm::Support out;
    std::string w;
    while (words >> w) {
        const long long j = sm::parse_integer(w);
        if (j < 1)
            throw sm::InvalidInput("truth indices are 1-based; got " + w);
        out.push_back(static_cast<sm::Index>(j - 1));
    }
    return out;
}

void write_text(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw sm::IoError("cannot open '" + path + "' for writing");
    out << text;
    if (!out)
        throw sm::IoError("failed writing '" + path + "'");
}

std::optional<sm::Matrix> load_sigma(const std::string& path)
{
    if (path.empty())
        return std::nullopt;
    return sm::read_covariance_csv(path);
}

sm::MomentKind coord_kind(sm::Estimator e)
{
    return e == sm::Estimator::coord_abs1 ? sm::MomentKind::abs1 : sm::MomentKind::signed2;
}

// Outputs of a power or preset run.
void emit_power(const sm::PowerTable& table, const std::string& csv, const std::string& svg)
{
    if (csv.empty())
        sm::write_csv(std::cout, table);
    else
        sm::emit_csv(table, csv);
    if (!svg.empty())
        sm::emit_svg(table, svg);
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Detection and variable selection in sparse Gaussian mixtures"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "sparsemix 1.0");

    // simulate
    auto* sim = app.add_subcommand("simulate", "Draw a dataset from a mixture scenario");
    std::string sim_config, sim_out, sim_labels, sim_truth;
    std::uint64_t sim_seed = 1;
    bool sim_header = false;
    sim->add_option("--config", sim_config,
                    "Scenario file: nu, p, n, s, amplitude, sigma "
                    "(identity | diagonal:v1,... | file:path | deflated:c)")
        ->required();
    sim->add_option("--seed", sim_seed, "Random seed")->required();
    sim->add_option("--out", sim_out, "Output data CSV (n rows, p columns)")->required();
    sim->add_option("--labels", sim_labels, "Also write component labels (0/1), one per row");
    sim->add_option("--truth", sim_truth, "Also write the planted support (1-based)");
    sim->add_flag("--header", sim_header, "Write a header row x1,...,xp");

    // stat
    auto* stat = app.add_subcommand("stat", "Evaluate a test statistic on a dataset");
    std::string stat_id, stat_data, stat_sigma;
    sm::Index stat_s = 1;
    bool stat_json = false, stat_header = false;
    int stat_restarts = sm::SearchConfig{}.restarts;
    int stat_mdp_grid = sm::MdpOptions{}.grid_points;
    std::string stat_help = "Statistic id:";
    for (auto id : sm::kAllStats)
        stat_help += " " + std::string(sm::to_string(id));
    stat->add_option("--stat", stat_id, stat_help)->required();
    stat->add_option("--data", stat_data, "Data CSV")->required();
    stat->add_option("--sigma", stat_sigma, "Known covariance CSV");
    stat->add_option("--s", stat_s, "Sparsity level");
    stat->add_option("--restarts", stat_restarts, "Random restarts of the sparse search");
    stat->add_option("--mdp-grid", stat_mdp_grid, "MDP grid points");
    stat->add_flag("--json", stat_json, "Print JSON");
    stat->add_flag("--header", stat_header, "Data CSV has a header row");

    // select
    auto* sel = app.add_subcommand("select", "Estimate the support of delta mu");
    std::string sel_est, sel_data, sel_sigma, sel_truth, sel_calib, sel_variant = "normalized";
    sm::Index sel_s = 1;
    double sel_alpha = 0.05;
    bool sel_header = false;
    sel->add_option("--estimator", sel_est,
                    "spectral | sym | asym | canonical | coord-abs1 | coord-signed2")
        ->required();
    sel->add_option("--data", sel_data, "Data CSV")->required();
    sel->add_option("--sigma", sel_sigma, "Known covariance CSV (spectral, canonical)");
    sel->add_option("--s", sel_s, "Sparsity level");
    sel->add_option("--alpha", sel_alpha, "Level for the Bonferroni estimators");
    sel->add_option("--truth", sel_truth, "True support (1-based) to score against");
    sel->add_option("--calib", sel_calib, "Calibration table (coordinate estimators)");
    sel->add_option("--variant", sel_variant, "sym objective: normalized | abs-sum");
    sel->add_flag("--header", sel_header, "Data CSV has a header row");

    // calibrate
    auto* cal = app.add_subcommand("calibrate", "Monte Carlo critical value under the null");
    std::string cal_stat, cal_out, cal_sigma;
    sm::Index cal_n = 0, cal_p = 0, cal_s = 1;
    double cal_alpha = 0.05;
    int cal_reps = 2000;
    std::uint64_t cal_seed = 1;
    unsigned cal_threads = 1;
    bool cal_unknown = false;
    int cal_restarts = sm::SearchConfig{}.restarts;
    int cal_mdp_grid = sm::MdpOptions{}.grid_points;
    cal->add_option("--stat", cal_stat, "Statistic id")->required();
    cal->add_option("--n", cal_n, "Sample size")->required();
    cal->add_option("--p", cal_p, "Dimension")->required();
    cal->add_option("--s", cal_s, "Sparsity level");
    cal->add_option("--alpha", cal_alpha, "Level");
    cal->add_option("--reps", cal_reps, "Null replications (>= 100)");
    cal->add_option("--seed", cal_seed, "Random seed");
    cal->add_option("--out", cal_out, "Table CSV; existing entries are kept")->required();
    cal->add_option("--sigma", cal_sigma, "Known covariance (conditional calibration)");
    cal->add_flag("--unknown-sigma", cal_unknown, "Covariance is unknown");
    cal->add_option("--threads", cal_threads, "Worker threads (0 = hardware)");
    cal->add_option("--restarts", cal_restarts, "Random restarts of the sparse search");
    cal->add_option("--mdp-grid", cal_mdp_grid, "MDP grid points");

    // power
    auto* pow = app.add_subcommand("power", "Power curves from an experiment config");
    pow->footer(sm::kExperimentConfigHelp);
    std::string pow_config, pow_calib, pow_csv, pow_svg, pow_sel_csv;
    int pow_threads = -1;
    bool pow_auto = false;
    pow->add_option("--config", pow_config, "Experiment config file")->required();
    pow->add_option("--calib", pow_calib, "Calibration table CSV");
    pow->add_flag("--auto-calib", pow_auto, "Calibrate missing entries with calib_reps");
    pow->add_option("--out-csv", pow_csv, "Power table CSV (default: stdout)");
    pow->add_option("--out-svg", pow_svg, "Power plot SVG");
    pow->add_option("--out-selection", pow_sel_csv, "Selection-error table CSV");
    pow->add_option("--threads", pow_threads, "Worker threads (0 = hardware)");

    // preset
    auto* pre = app.add_subcommand("preset", "Run a named experiment");
    std::string pre_name, pre_csv, pre_svg, pre_calib;
    std::uint64_t pre_seed = 1;
    int pre_reps = 0, pre_calib_reps = 0, pre_mdp_grid = 0, pre_mdp_refine = -1;
    unsigned pre_threads = 1;
    pre->add_option("name", pre_name, "paper-fig1 | paper-fig2 | small")->required();
    pre->add_option("--seed", pre_seed, "Master seed");
    pre->add_option("--reps", pre_reps, "Override replications per cell");
    pre->add_option("--calib-reps", pre_calib_reps, "Override calibration replications");
    pre->add_option("--mdp-grid", pre_mdp_grid, "Override MDP grid points");
    pre->add_option("--mdp-refine", pre_mdp_refine, "Override MDP golden-section steps");
    pre->add_option("--calib", pre_calib, "Use this calibration table instead of calibrating");
    pre->add_option("--out-csv", pre_csv, "Power table CSV (default: stdout)");
    pre->add_option("--out-svg", pre_svg, "Power plot SVG");
    pre->add_option("--threads", pre_threads, "Worker threads (0 = hardware)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (*sim) {
            const auto kv = sm::KeyValueConfig::load(sim_config);
            sm::Scenario sc = sm::scenario_from_config(kv);
            sc.labels_wanted = !sim_labels.empty();
            const auto sample = sm::sample_mixture(sc, sim_seed);
            {
                std::ofstream out(sim_out);
                if (!out)
                    throw sm::IoError("cannot open '" + sim_out + "' for writing");
                if (sim_header) {
                    for (sm::Index j = 0; j < sample.data.p(); ++j)
                        out << (j ? "," : "") << 'x' << j + 1;
                    out << '\n';
                }
                sm::write_matrix_csv(out, sample.data.data());
            }
            if (sample.labels) {
                std::string text;
                for (int l : *sample.labels)
                    text += std::to_string(l) + "\n";
                write_text(sim_labels, text);
            }
            if (!sim_truth.empty()) {
                std::string text;
                const sm::Vector delta = sc.params.delta_mu();
                for (sm::Index j = 0; j < delta.size(); ++j)
                    if (delta(j) != 0.0)
                        text += (text.empty() ? "" : ",") + std::to_string(j + 1);
                write_text(sim_truth, text + "\n");
            }
            return kExitOk;
        }

        if (*stat) {
            const sm::StatId id = sm::parse_stat_id(stat_id);
            const sm::Dataset d(sm::read_matrix_csv(stat_data, stat_header), load_sigma(stat_sigma));
            sm::StatOptions opts;
            opts.s = stat_s;
            opts.search.restarts = stat_restarts;
            opts.mdp.grid_points = stat_mdp_grid;
            const sm::StatValue v = sm::compute_stat(id, d, nullptr, opts);
            const auto threshold = sm::analytic_threshold(id, d.n(), d.p(), stat_s);
            if (stat_json) {
                json out{{"stat_id", sm::to_string(id)},
                         {"value", v.value},
                         {"support", support_json(v.support)},
                         {"rejection_side", sm::to_string(v.rejection_side)}};
                if (sm::uses_sparsity(id))
                    out["s"] = stat_s;
                if (v.direction)
                    out["direction"] = vector_json(*v.direction);
                if (threshold)
                    out["analytic_threshold"] = *threshold;
                std::cout << out.dump(2) << '\n';
            } else {
                std::cout << "stat " << sm::to_string(id) << "\nvalue "
                          << sm::format_double(v.value) << "\nside "
                          << sm::to_string(v.rejection_side) << "\nsupport";
                for (auto j : v.support)
                    std::cout << ' ' << j + 1;
                std::cout << '\n';
                if (threshold)
                    std::cout << "analytic_threshold " << sm::format_double(*threshold) << '\n';
            }
            return kExitOk;
        }

        if (*sel) {
            const sm::Estimator est = sm::parse_estimator(sel_est);
            const sm::Dataset d(sm::read_matrix_csv(sel_data, sel_header), load_sigma(sel_sigma));
            sm::ExperimentConfig cfg;
            cfg.alpha = sel_alpha;
            if (sel_variant == "abs-sum")
                cfg.sym_variant = sm::SymVariant::abs_sum;
            else if (sel_variant != "normalized")
                throw sm::InvalidInput("--variant must be normalized or abs-sum");
            sm::CalibrationTable calib;
            if (!sel_calib.empty())
                calib = sm::CalibrationTable::load(sel_calib);
            else if (est == sm::Estimator::coord_abs1 || est == sm::Estimator::coord_signed2)
                throw sm::MissingCalibration(
                    "coordinate estimators need --calib with the entry " +
                    sm::coord_bonferroni_key(coord_kind(est), d.n(), d.p(), sel_alpha)
                        .describe() +
                    "; create it with `sparsemix calibrate --stat " + sel_est + " --n " +
                    std::to_string(d.n()) + " --p 1 --alpha " +
                    sm::format_compact(sm::bonferroni_level(sel_alpha, d.p())) + " --out calib.csv`");
            const sm::Matrix* sigma = d.known_sigma() ? &*d.known_sigma() : nullptr;
            const auto e = sm::estimate_support(est, d, sigma, sel_s, cfg, calib);
            json out{{"estimator", sm::to_string(est)}, {"support", support_json(e.indices)}};
            if (est != sm::Estimator::canonical && est != sm::Estimator::coord_abs1 &&
                est != sm::Estimator::coord_signed2)
                out["s"] = sel_s;
            if (e.direction)
                out["direction"] = vector_json(*e.direction);
            if (!sel_truth.empty()) {
                const auto truth = read_truth(sel_truth);
                out["truth"] = support_json(truth);
                out["selection_error"] = sm::selection_error(e, truth);
            }
            std::cout << out.dump(2) << '\n';
            return kExitOk;
        }

        if (*cal) {
            sm::CalibrationRequest req;
            req.stat = sm::parse_stat_id(cal_stat);
            req.n = cal_n;
            req.p = cal_p;
            req.s = cal_s;
            req.alpha = cal_alpha;
            req.reps = cal_reps;
            req.seed = cal_seed;
            req.threads = cal_threads;
            req.covariance_known = !cal_unknown;
            req.sigma = load_sigma(cal_sigma);
            req.options.search.restarts = cal_restarts;
            req.options.mdp.grid_points = cal_mdp_grid;
            sm::CalibrationTable table;
            if (std::filesystem::exists(cal_out))
                table = sm::CalibrationTable::load(cal_out);
            const auto entry = sm::calibrate(req);
            table.add(entry);
            table.save(cal_out);
            std::cout << entry.key.describe() << " critical " << sm::format_double(entry.critical)
                      << '\n';
            return kExitOk;
        }

        if (*pow) {
            auto cfg = sm::experiment_from_config(sm::KeyValueConfig::load(pow_config));
            if (pow_threads >= 0)
                cfg.threads = static_cast<unsigned>(pow_threads);
            if (!pow_csv.empty())
                cfg.out_csv = pow_csv;
            if (!pow_svg.empty())
                cfg.out_svg = pow_svg;
            sm::CalibrationTable calib;
            if (!pow_calib.empty())
                calib = sm::CalibrationTable::load(pow_calib);
            if (pow_auto) {
                sm::CalibrationTable fresh = sm::calibrate_for(
                    cfg, cfg.calib_reps, sm::derive_seed(cfg.seed, {0xca11b}));
                fresh.merge(calib);  // user-provided entries win
                calib = std::move(fresh);
            }
            if (!cfg.stats.empty())
                emit_power(sm::run_power_curve(cfg, calib), cfg.out_csv, cfg.out_svg);
            if (!pow_sel_csv.empty()) {
                const auto t = sm::run_selection_curve(cfg, calib);
                sm::emit_csv(t, pow_sel_csv);
            }
            return kExitOk;
        }

        if (*pre) {
            auto cfg = sm::make_preset(pre_name);
            cfg.seed = pre_seed;
            cfg.threads = pre_threads;
            if (pre_reps > 0)
                cfg.reps = pre_reps;
            if (pre_calib_reps > 0)
                cfg.calib_reps = pre_calib_reps;
            if (pre_mdp_grid > 0)
                cfg.options.mdp.grid_points = pre_mdp_grid;
            if (pre_mdp_refine >= 0)
                cfg.options.mdp.refine_steps = pre_mdp_refine;
            cfg.validate();
            const sm::CalibrationTable calib =
                pre_calib.empty()
                    ? sm::calibrate_for(cfg, cfg.calib_reps, sm::derive_seed(cfg.seed, {0xca11b}))
                    : sm::CalibrationTable::load(pre_calib);
            emit_power(sm::run_power_curve(cfg, calib), pre_csv, pre_svg);
            return kExitOk;
        }
    } catch (const sm::MissingCalibration& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitMissingCalibration;
    } catch (const sm::InvalidInput& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitFailure;
}
