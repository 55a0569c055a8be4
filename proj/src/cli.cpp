#include "rfi/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rfi/baseline_lr.hpp"
#include "rfi/csv.hpp"
#include "rfi/data_model.hpp"
#include "rfi/diagnostics.hpp"
#include "rfi/errors.hpp"
#include "rfi/genetics.hpp"
#include "rfi/gibbs.hpp"
#include "rfi/mt_models.hpp"
#include "rfi/pedigree.hpp"
#include "rfi/simulator.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace rfi {
namespace {

std::string fnv1a64(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::uint64_t h = 14695981039346656037ull;
    char buf[1 << 16];
    for (;;) {
        in.read(buf, sizeof buf);
        const std::streamsize got = in.gcount();
        if (got <= 0) break;
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
    }
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << h;
    return out.str();
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path.string());
    f << std::setprecision(17);
    return f;
}

void write_json_file(const fs::path& path, const ordered_json& j) {
    auto f = open_out(path);
    f << j.dump(2) << '\n';
}

ordered_json vec_json(const Eigen::VectorXd& v) {
    ordered_json out = ordered_json::array();
    for (int i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

ordered_json mat_json(const Eigen::MatrixXd& m) {
    ordered_json out = ordered_json::array();
    for (int i = 0; i < m.rows(); ++i) {
        ordered_json row = ordered_json::array();
        for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        out.push_back(row);
    }
    return out;
}

ordered_json mcmc_json(const McmcSpec& m) {
    return {{"chains", m.chains},   {"length", m.length}, {"burnin", m.burnin},
            {"thin", m.thin},       {"seed", m.seed},     {"random_init", m.random_init}};
}

ordered_json priors_json(const PriorSpec& p) {
    return {{"lambda0", p.lambda0},
            {"tau2", p.tau2},
            {"beta0", p.beta0},
            {"omega2", p.omega2},
            {"nu0", p.nu0},
            {"s02", p.s02},
            {"nu0_tw", p.nu0_tw},
            {"s02_tw", p.s02_tw},
            {"iw_df_margin", p.iw_df_margin},
            {"iw_scale", p.iw_scale}};
}

ordered_json model_json(const ModelSpec& s) {
    return {{"family", family_to_string(s.family)},
            {"intercept", s.intercept},
            {"dim_effect", s.dim_effect},
            {"tw_effect", s.tw_effect},
            {"animal_effect", s.animal_effect},
            {"sink_indices", s.sink_indices},
            {"st_trait", s.st_trait},
            {"mt_regression_per_sample", s.mt_regression_per_sample},
            {"mcmc", mcmc_json(s.mcmc)},
            {"priors", priors_json(s.priors)}};
}

void check_keys(const json& obj, const std::string& prefix,
                std::initializer_list<const char*> allowed) {
    if (!obj.is_object())
        throw ValidationError("config: '" + (prefix.empty() ? "root" : prefix) +
                              "' must be an object");
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const char* a : allowed)
            if (item.key() == a) {
                known = true;
                break;
            }
        if (!known)
            throw ValidationError("config: unknown key '" +
                                  (prefix.empty() ? item.key() : prefix + "." + item.key()) +
                                  "'");
    }
}

template <typename T>
void read_key(const json& obj, const char* key, T& out, const std::string& prefix) {
    auto it = obj.find(key);
    if (it == obj.end()) return;
    try {
        out = it->template get<T>();
    } catch (const json::exception&) {
        throw ValidationError("config: bad value for '" + prefix + "." + key + "'");
    }
}

/// Post-burnin draws of every successful chain, concatenated per parameter.
struct PooledSamples {
    std::vector<std::string> names;
    std::vector<std::vector<double>> values;
    std::vector<SummaryStats> stats;
    int n_ok = 0;

    int index(const std::string& name) const {
        for (std::size_t p = 0; p < names.size(); ++p)
            if (names[p] == name) return static_cast<int>(p);
        return -1;
    }
};

PooledSamples pool_samples(const std::vector<ChainResult>& chains) {
    PooledSamples out;
    for (const auto& ch : chains) {
        if (!ch.ok()) continue;
        if (out.names.empty()) {
            out.names = ch.param_names;
            out.values.resize(out.names.size());
        }
        ++out.n_ok;
        for (std::size_t p = 0; p < out.names.size(); ++p)
            for (int r = 0; r < ch.samples.rows(); ++r)
                out.values[p].push_back(ch.samples(r, static_cast<int>(p)));
    }
    for (const auto& v : out.values) out.stats.push_back(summarize(v));
    return out;
}

std::vector<std::string> write_chain_files(const fs::path& dir,
                                           const std::vector<ChainResult>& chains) {
    std::vector<std::string> written;
    for (const auto& ch : chains) {
        if (!ch.ok()) continue;
        const std::string idx = std::to_string(ch.chain_index);
        {
            auto f = open_out(dir / ("trace_chain" + idx + ".csv"));
            f << "iter";
            for (const auto& p : ch.param_names) f << ',' << p;
            f << '\n';
            for (int r = 0; r < ch.trace.rows(); ++r) {
                f << (r + 1);
                for (int c = 0; c < ch.trace.cols(); ++c) f << ',' << ch.trace(r, c);
                f << '\n';
            }
            written.push_back("trace_chain" + idx + ".csv");
        }
        {
            auto f = open_out(dir / ("samples_chain" + idx + ".csv"));
            f << "iter,param,value\n";
            for (int r = 0; r < ch.samples.rows(); ++r)
                for (int c = 0; c < ch.samples.cols(); ++c)
                    f << ch.saved_iterations[static_cast<std::size_t>(r)] << ','
                      << ch.param_names[static_cast<std::size_t>(c)] << ',' << ch.samples(r, c)
                      << '\n';
            written.push_back("samples_chain" + idx + ".csv");
        }
    }
    return written;
}

double write_diagnostics_csv(const fs::path& path, const std::vector<std::string>& names,
                             const std::vector<std::vector<std::vector<double>>>& per_param) {
    auto f = open_out(path);
    f << "param,iteration,shrink_factor\n";
    double max_final = 0.0;
    for (std::size_t p = 0; p < names.size(); ++p) {
        auto traj = shrink_trajectory(per_param[p]);
        for (const auto& pt : traj) f << names[p] << ',' << pt.iteration << ',' << pt.sf << '\n';
        if (!traj.empty()) max_final = std::max(max_final, traj.back().sf);
    }
    return max_final;
}

void write_genetic_values(const fs::path& path, const std::vector<std::string>& ids,
                          const Eigen::VectorXd& gv) {
    auto f = open_out(path);
    f << "animal,gv\n";
    for (int i = 0; i < gv.size(); ++i) f << ids[static_cast<std::size_t>(i)] << ',' << gv(i) << '\n';
}

}  // namespace

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError(path + ": " + e.what());
    }
    check_keys(j, "", {"data", "model", "mcmc", "priors", "sim"});

    RunConfig cfg;
    if (j.contains("data")) {
        const json& d = j["data"];
        check_keys(d, "data", {"phenotypes", "pedigree"});
        read_key(d, "phenotypes", cfg.phenotypes, "data");
        read_key(d, "pedigree", cfg.pedigree, "data");
    }
    if (j.contains("model")) {
        const json& m = j["model"];
        check_keys(m, "model",
                   {"family", "sink_indices", "st_trait", "mt_regression_per_sample",
                    "intercept", "dim_effect", "tw_effect", "animal_effect"});
        if (m.contains("family")) {
            std::string fam;
            read_key(m, "family", fam, "model");
            cfg.model.family = family_from_string(fam);
        }
        read_key(m, "sink_indices", cfg.model.sink_indices, "model");
        read_key(m, "st_trait", cfg.model.st_trait, "model");
        read_key(m, "mt_regression_per_sample", cfg.model.mt_regression_per_sample, "model");
        for (const char* k : {"intercept", "dim_effect", "tw_effect", "animal_effect"})
            if (m.contains(k)) cfg.model.effects_overridden = true;
        read_key(m, "intercept", cfg.model.intercept, "model");
        read_key(m, "dim_effect", cfg.model.dim_effect, "model");
        read_key(m, "tw_effect", cfg.model.tw_effect, "model");
        read_key(m, "animal_effect", cfg.model.animal_effect, "model");
    }
    if (j.contains("mcmc")) {
        const json& m = j["mcmc"];
        check_keys(m, "mcmc", {"chains", "length", "burnin", "thin", "seed", "random_init"});
        read_key(m, "chains", cfg.model.mcmc.chains, "mcmc");
        read_key(m, "length", cfg.model.mcmc.length, "mcmc");
        read_key(m, "burnin", cfg.model.mcmc.burnin, "mcmc");
        read_key(m, "thin", cfg.model.mcmc.thin, "mcmc");
        read_key(m, "seed", cfg.model.mcmc.seed, "mcmc");
        read_key(m, "random_init", cfg.model.mcmc.random_init, "mcmc");
    }
    if (j.contains("priors")) {
        const json& p = j["priors"];
        check_keys(p, "priors",
                   {"lambda0", "tau2", "beta0", "omega2", "nu0", "s02", "nu0_tw", "s02_tw",
                    "iw_df_margin", "iw_scale"});
        read_key(p, "lambda0", cfg.model.priors.lambda0, "priors");
        read_key(p, "tau2", cfg.model.priors.tau2, "priors");
        read_key(p, "beta0", cfg.model.priors.beta0, "priors");
        read_key(p, "omega2", cfg.model.priors.omega2, "priors");
        read_key(p, "nu0", cfg.model.priors.nu0, "priors");
        read_key(p, "s02", cfg.model.priors.s02, "priors");
        read_key(p, "nu0_tw", cfg.model.priors.nu0_tw, "priors");
        read_key(p, "s02_tw", cfg.model.priors.s02_tw, "priors");
        read_key(p, "iw_df_margin", cfg.model.priors.iw_df_margin, "priors");
        read_key(p, "iw_scale", cfg.model.priors.iw_scale, "priors");
    }
    if (j.contains("sim")) {
        const json& s = j["sim"];
        check_keys(s, "sim",
                   {"n_sires", "n_dams", "n_offspring", "n_dim_levels", "n_tw_levels", "seed",
                    "raw_scale", "with_test_week"});
        read_key(s, "n_sires", cfg.sim.n_sires, "sim");
        read_key(s, "n_dams", cfg.sim.n_dams, "sim");
        read_key(s, "n_offspring", cfg.sim.n_offspring, "sim");
        read_key(s, "n_dim_levels", cfg.sim.n_dim_levels, "sim");
        read_key(s, "n_tw_levels", cfg.sim.n_tw_levels, "sim");
        read_key(s, "seed", cfg.sim.seed, "sim");
        read_key(s, "raw_scale", cfg.sim.raw_scale, "sim");
        read_key(s, "with_test_week", cfg.sim.with_test_week, "sim");
    }
    return cfg;
}

void cmd_simulate(const RunConfig& config, const std::string& out_dir) {
    const auto t0 = std::chrono::steady_clock::now();
    const SimOptions& sim = config.sim;
    Pedigree ped = simulate_pedigree(sim.n_sires, sim.n_dams, sim.n_offspring, sim.seed);
    GroundTruth truth = paper_replica_truth(sim.with_test_week);
    SimulationOutput out = simulate_phenotypes(ped, truth, sim.n_dim_levels, sim.n_tw_levels,
                                               sim.seed + 1, sim.raw_scale);

    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    {
        auto f = open_out(dir / "pedigree.csv");
        f << "animal,sire,dam\n";
        for (int i = 0; i < ped.size(); ++i) {
            f << ped.ids()[static_cast<std::size_t>(i)] << ','
              << (ped.sire(i) >= 0 ? ped.ids()[static_cast<std::size_t>(ped.sire(i))] : "0")
              << ','
              << (ped.dam(i) >= 0 ? ped.ids()[static_cast<std::size_t>(ped.dam(i))] : "0")
              << '\n';
        }
    }
    out.table.to_csv((dir / "phenotypes.csv").string());
    {
        // residual-scale intake value first, then per-trait values with the
        // observed-intake column assembled through the structural coefficients
        auto f = open_out(dir / "true_genetic_values.csv");
        f << "animal,rfi";
        for (const auto& t : out.table.trait_names) f << ',' << t;
        f << '\n';
        const int nt = truth.k();
        for (int i = 0; i < ped.size(); ++i) {
            double intake = out.genetic_values(i, 0);
            for (int s = 1; s < nt; ++s) intake += truth.lambda(s - 1) * out.genetic_values(i, s);
            f << ped.ids()[static_cast<std::size_t>(i)] << ',' << out.genetic_values(i, 0) << ','
              << intake;
            for (int s = 1; s < nt; ++s) f << ',' << out.genetic_values(i, s);
            f << '\n';
        }
    }

    ordered_json tj;
    tj["scale"] = "standardized";
    tj["traits"] = out.table.trait_names;
    tj["lambda"] = vec_json(truth.lambda);
    tj["sigma2_a_rfi"] = truth.components.sigma2_a1;
    tj["sigma2_e_rfi"] = truth.components.sigma2_e1;
    tj["genetic_sink"] = mat_json(truth.components.G_sink);
    tj["residual_sink"] = mat_json(truth.components.R_sink);
    tj["test_week_variance"] = vec_json(truth.tw_var);
    tj["raw_mean"] = vec_json(truth.raw_mean);
    tj["raw_sd"] = vec_json(truth.raw_sd);
    {
        const std::string& intake = out.table.trait_names.front();
        const auto& c = truth.components;
        const double da = delta_term(truth.lambda, c.G_sink);
        const double de = delta_term(truth.lambda, c.R_sink);
        ordered_json derived;
        derived["h2_rfi"] = heritability_rfi(c.sigma2_a1, c.sigma2_e1);
        derived["h2_" + intake] = heritability_dmi(c.sigma2_a1, c.sigma2_e1, da, de);
        for (int s = 1; s < truth.k(); ++s)
            derived["h2_" + out.table.trait_names[static_cast<std::size_t>(s)]] =
                heritability_rfi(c.G_sink(s - 1, s - 1), c.R_sink(s - 1, s - 1));
        derived["rg_" + intake + "_rfi"] =
            genetic_correlation_dmi_rfi(truth.lambda, c.G_sink, c.sigma2_a1);
        for (int s = 1; s < truth.k(); ++s)
            derived["rg_" + intake + "_" + out.table.trait_names[static_cast<std::size_t>(s)]] =
                genetic_correlation_dmi_sink(truth.lambda, c.G_sink, c.sigma2_a1, s - 1);
        tj["derived"] = derived;
    }
    write_json_file(dir / "truth.json", tj);

    ordered_json man;
    man["command"] = "simulate";
    man["options"] = {{"n_sires", sim.n_sires},
                      {"n_dams", sim.n_dams},
                      {"n_offspring", sim.n_offspring},
                      {"n_dim_levels", sim.n_dim_levels},
                      {"n_tw_levels", sim.n_tw_levels},
                      {"seed", sim.seed},
                      {"raw_scale", sim.raw_scale},
                      {"with_test_week", sim.with_test_week}};
    man["outputs"] = {"manifest.json", "pedigree.csv", "phenotypes.csv",
                      "true_genetic_values.csv", "truth.json"};
    man["elapsed_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_json_file(dir / "manifest.json", man);
    std::cout << "simulate: " << out.table.n() << " records over " << ped.size()
              << " animals -> " << out_dir << '\n';
}

void cmd_fit(const RunConfig& config, const std::string& out_dir) {
    const auto t0 = std::chrono::steady_clock::now();
    if (config.phenotypes.empty() || config.pedigree.empty())
        throw ValidationError("fit needs data.phenotypes and data.pedigree in the config");
    const std::string pheno_digest = fnv1a64(config.phenotypes);
    const std::string ped_digest = fnv1a64(config.pedigree);

    const PhenotypeTable table = PhenotypeTable::from_csv(config.phenotypes);
    const Pedigree ped = Pedigree::from_csv(config.pedigree);
    const Design design = build_design(table, ped);
    const Eigen::SparseMatrix<double> a_inv = ped.inverse_numerator_matrix();

    ModelSpec spec = config.model;
    spec.apply_family_defaults();
    spec.validate(table.k());

    Standardization stats;
    const PhenotypeTable standardized = standardize(table, &stats);

    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    std::vector<std::string> outputs;
    std::vector<ChainResult> chains;
    Eigen::VectorXd gv;
    ordered_json extra;

    if (spec.family == Family::lr1) {
        RegressionFit stage1 = fit_stage1(standardized, spec.sink_indices, 0);
        {
            auto f = open_out(dir / "coefficients.csv");
            f << "term,estimate,se\n";
            for (std::size_t i = 0; i < spec.sink_indices.size(); ++i)
                f << "lambda_"
                  << table.trait_names[static_cast<std::size_t>(spec.sink_indices[i])] << ','
                  << stage1.coefficients(static_cast<int>(i)) << ','
                  << stage1.standard_errors(static_cast<int>(i)) << '\n';
            outputs.push_back("coefficients.csv");
        }
        {
            auto f = open_out(dir / "rfi_phenotype.csv");
            f << "animal,rfi_phenotype\n";
            for (int i = 0; i < table.n(); ++i)
                f << table.animal[static_cast<std::size_t>(i)] << ',' << stage1.residuals(i)
                  << '\n';
            outputs.push_back("rfi_phenotype.csv");
        }
        ordered_json s1;
        for (std::size_t i = 0; i < spec.sink_indices.size(); ++i)
            s1["lambda_" + table.trait_names[static_cast<std::size_t>(spec.sink_indices[i])]] =
                stage1.coefficients(static_cast<int>(i));
        extra["stage1_coefficients"] = s1;

        Stage2Fit stage2 = fit_stage2(stage1.residuals, table, design, a_inv, spec);
        chains = std::move(stage2.chains);
        gv = stage2.genetic_values;
    } else {
        const GibbsSampler sampler = build_sampler(spec, standardized, design, a_inv);
        chains = run_parallel(sampler, spec.mcmc);
        const ModelLayout& lay = sampler.layout();
        const int m = lay.m();
        if (lay.animal_effect) {
            Eigen::MatrixXd pooled_gv = Eigen::MatrixXd::Zero(sampler.q(), m);
            Eigen::VectorXd pooled_rfi = Eigen::VectorXd::Zero(sampler.q());
            int n_ok = 0;
            for (const auto& ch : chains) {
                if (!ch.ok()) continue;
                pooled_gv += ch.gv_mean;
                if (ch.rfi_gv_mean.size() > 0) pooled_rfi += ch.rfi_gv_mean;
                ++n_ok;
            }
            pooled_gv /= static_cast<double>(n_ok);
            pooled_rfi /= static_cast<double>(n_ok);
            if (spec.family == Family::mt) {
                PooledSamples pooled = pool_samples(chains);
                Eigen::MatrixXd g_mean(m, m);
                for (int i = 0; i < m; ++i)
                    for (int jj = i; jj < m; ++jj) {
                        int p = pooled.index("g_" + lay.labels[static_cast<std::size_t>(i)] +
                                             "_" + lay.labels[static_cast<std::size_t>(jj)]);
                        g_mean(i, jj) = g_mean(jj, i) = pooled.stats[static_cast<std::size_t>(p)].mean;
                    }
                const Eigen::VectorXd b = partial_regressions_from_covariance(g_mean);
                ordered_json pr;
                for (int s = 1; s < m; ++s)
                    pr[lay.labels[static_cast<std::size_t>(s)]] = b(s - 1);
                extra["genetic_partial_regressions"] = pr;
                gv = spec.mt_regression_per_sample
                         ? pooled_rfi
                         : Eigen::VectorXd(pooled_gv.col(0) - pooled_gv.rightCols(m - 1) * b);
            } else if (spec.family == Family::mt_chol) {
                gv = pooled_gv.col(m - 1);
            } else {
                gv = pooled_gv.col(0);
            }
        }
    }

    PooledSamples pooled = pool_samples(chains);
    auto chain_files = write_chain_files(dir, chains);
    outputs.insert(outputs.end(), chain_files.begin(), chain_files.end());

    if (spec.family != Family::lr1) {
        std::vector<std::size_t> coeff_params;
        for (std::size_t p = 0; p < pooled.names.size(); ++p)
            if (pooled.names[p].rfind("lambda_", 0) == 0 || pooled.names[p].rfind("b_", 0) == 0)
                coeff_params.push_back(p);
        if (!coeff_params.empty()) {
            auto f = open_out(dir / "coefficients.csv");
            f << "term,estimate,se\n";
            for (std::size_t p : coeff_params)
                f << pooled.names[p] << ',' << pooled.stats[p].mean << ',' << pooled.stats[p].sd
                  << '\n';
            outputs.push_back("coefficients.csv");
        }
    }

    if (gv.size() > 0) {
        write_genetic_values(dir / "genetic_values.csv", ped.ids(), gv);
        outputs.push_back("genetic_values.csv");
    }

    if (pooled.n_ok >= 2) {
        std::vector<std::vector<std::vector<double>>> per_param(pooled.names.size());
        for (const auto& ch : chains) {
            if (!ch.ok()) continue;
            for (std::size_t p = 0; p < pooled.names.size(); ++p) {
                const Eigen::VectorXd col = ch.trace.col(static_cast<int>(p));
                per_param[p].emplace_back(col.data(), col.data() + col.size());
            }
        }
        write_diagnostics_csv(dir / "diagnostics.csv", pooled.names, per_param);
        outputs.push_back("diagnostics.csv");
    }

    ordered_json summary;
    summary["family"] = family_to_string(spec.family);
    summary["n_records"] = table.n();
    summary["n_animals"] = ped.size();
    summary["chains_ok"] = pooled.n_ok;
    summary["mcmc"] = mcmc_json(spec.mcmc);
    {
        ordered_json sb;
        for (int jt = 0; jt < table.k(); ++jt)
            sb[table.trait_names[static_cast<std::size_t>(jt)]] = {{"mean", stats.mean(jt)},
                                                                   {"sd", stats.sd(jt)}};
        summary["standardization"] = sb;
    }
    {
        ordered_json params;
        for (std::size_t p = 0; p < pooled.names.size(); ++p) {
            const SummaryStats& st = pooled.stats[p];
            params[pooled.names[p]] = {{"mean", st.mean},
                                       {"sd", st.sd},
                                       {"q025", st.q025},
                                       {"median", st.median},
                                       {"q975", st.q975}};
        }
        summary["parameters"] = params;
    }
    {
        ordered_json her, rg;
        for (std::size_t p = 0; p < pooled.names.size(); ++p) {
            if (pooled.names[p].rfind("h2_", 0) == 0)
                her[pooled.names[p].substr(3)] = pooled.stats[p].mean;
            else if (pooled.names[p].rfind("rg_", 0) == 0)
                rg[pooled.names[p].substr(3)] = pooled.stats[p].mean;
        }
        if (!her.empty()) summary["heritability"] = her;
        if (!rg.empty()) summary["genetic_correlation"] = rg;
    }
    {
        // same genetic variance over a denominator that also counts the
        // test-week variance, averaged across aligned posterior draws
        ordered_json inc;
        for (std::size_t p = 0; p < pooled.names.size(); ++p) {
            if (pooled.names[p].rfind("sigma2_a_", 0) != 0) continue;
            const std::string label = pooled.names[p].substr(9);
            const int ie = pooled.index("sigma2_e_" + label);
            const int it = pooled.index("sigma2_tw_" + label);
            if (ie < 0 || it < 0) continue;
            const auto& va = pooled.values[p];
            const auto& ve = pooled.values[static_cast<std::size_t>(ie)];
            const auto& vt = pooled.values[static_cast<std::size_t>(it)];
            double acc = 0.0;
            for (std::size_t i = 0; i < va.size(); ++i)
                acc += va[i] / (va[i] + ve[i] + vt[i]);
            inc[label] = acc / static_cast<double>(va.size());
        }
        if (!inc.empty()) summary["heritability_including_test_week"] = inc;
    }
    for (const auto& item : extra.items()) summary[item.key()] = item.value();
    write_json_file(dir / "summary.json", summary);
    outputs.push_back("summary.json");

    outputs.push_back("manifest.json");
    std::sort(outputs.begin(), outputs.end());
    ordered_json man;
    man["command"] = "fit";
    man["inputs"] = {{"phenotypes", {{"path", config.phenotypes}, {"digest", pheno_digest}}},
                     {"pedigree", {{"path", config.pedigree}, {"digest", ped_digest}}}};
    man["n_records"] = table.n();
    man["n_animals"] = ped.size();
    man["model"] = model_json(spec);
    man["outputs"] = outputs;
    man["elapsed_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_json_file(dir / "manifest.json", man);
    std::cout << "fit " << family_to_string(spec.family) << ": " << pooled.n_ok << "/"
              << chains.size() << " chains ok -> " << out_dir << '\n';
}

double cmd_diagnose(const std::string& run_dir) {
    const fs::path dir(run_dir);
    if (!fs::is_directory(dir)) throw IoError("run directory not found: " + run_dir);

    std::vector<std::pair<int, fs::path>> traces;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        const std::string head = "trace_chain", tail = ".csv";
        if (name.size() <= head.size() + tail.size() || name.rfind(head, 0) != 0 ||
            name.compare(name.size() - tail.size(), tail.size(), tail) != 0)
            continue;
        const std::string mid = name.substr(head.size(), name.size() - head.size() - tail.size());
        if (mid.find_first_not_of("0123456789") != std::string::npos) continue;
        traces.emplace_back(std::stoi(mid), entry.path());
    }
    std::sort(traces.begin(), traces.end());
    if (traces.size() < 2)
        throw ValidationError("convergence diagnostics need at least two chain traces");

    std::vector<std::string> names;
    std::vector<std::vector<std::vector<double>>> per_param;
    std::size_t rows0 = 0;
    for (std::size_t c = 0; c < traces.size(); ++c) {
        auto t = csv::read_file(traces[c].second.string());
        if (t.header.empty() || t.header[0] != "iter")
            throw ValidationError(traces[c].second.string() + ": first column must be iter");
        std::vector<std::string> these(t.header.begin() + 1, t.header.end());
        if (c == 0) {
            names = these;
            per_param.resize(names.size());
            rows0 = t.rows.size();
        } else if (these != names) {
            throw ValidationError("chain trace headers differ across files");
        } else if (t.rows.size() != rows0) {
            throw ValidationError("chain traces have different lengths");
        }
        for (std::size_t p = 0; p < names.size(); ++p) {
            std::vector<double> col;
            col.reserve(t.rows.size());
            for (const auto& row : t.rows)
                col.push_back(csv::to_double(row[p + 1], traces[c].second.string()));
            per_param[p].push_back(std::move(col));
        }
    }

    const double max_final = write_diagnostics_csv(dir / "diagnostics.csv", names, per_param);
    std::cout << "diagnose: " << traces.size() << " chains, max final shrink factor "
              << std::setprecision(4) << max_final << '\n';
    return max_final;
}

CompareResult cmd_compare(const std::string& run_a, const std::string& run_b,
                          const std::string& out_csv) {
    auto read_gv = [](const fs::path& p) {
        if (!fs::exists(p)) throw IoError("genetic values not found: " + p.string());
        auto t = csv::read_file(p.string());
        const int ca = t.column("animal"), cg = t.column("gv");
        if (ca < 0 || cg < 0)
            throw ValidationError(p.string() + ": header must contain animal,gv");
        std::vector<std::pair<std::string, double>> out;
        out.reserve(t.rows.size());
        for (const auto& r : t.rows)
            out.emplace_back(r[static_cast<std::size_t>(ca)],
                             csv::to_double(r[static_cast<std::size_t>(cg)], p.string()));
        return out;
    };
    const auto a = read_gv(fs::path(run_a) / "genetic_values.csv");
    const auto b = read_gv(fs::path(run_b) / "genetic_values.csv");
    std::unordered_map<std::string, double> b_by_id(b.begin(), b.end());

    std::vector<std::string> ids;
    std::vector<double> gv_a, gv_b;
    for (const auto& [id, v] : a) {
        auto it = b_by_id.find(id);
        if (it == b_by_id.end()) continue;
        ids.push_back(id);
        gv_a.push_back(v);
        gv_b.push_back(it->second);
    }
    if (ids.size() < 2)
        throw ValidationError("runs share fewer than two animals with genetic values");

    const auto rank_a = average_ranks(gv_a);
    const auto rank_b = average_ranks(gv_b);
    CompareResult res;
    res.spearman = spearman(gv_a, gv_b);
    res.shared = static_cast<int>(ids.size());

    auto f = open_out(out_csv);
    f << "animal,gv_model_a,gv_model_b,rank_a,rank_b\n";
    for (std::size_t i = 0; i < ids.size(); ++i)
        f << ids[i] << ',' << gv_a[i] << ',' << gv_b[i] << ',' << rank_a[i] << ',' << rank_b[i]
          << '\n';
    std::cout << "compare: spearman " << std::setprecision(6) << res.spearman << " over "
              << res.shared << " shared animals -> " << out_csv << '\n';
    return res;
}

int cli_main(int argc, char** argv) {
    CLI::App app{"Bayesian evaluation models for residual feed intake"};
    app.require_subcommand(1);

    std::string sim_config, sim_out = "sim_out";
    std::uint64_t sim_seed = 0;
    auto* sim = app.add_subcommand("simulate", "Generate a synthetic dataset");
    auto* sim_cfg_opt = sim->add_option("--config", sim_config, "JSON config file");
    auto* sim_seed_opt = sim->add_option("--seed", sim_seed, "Override the simulation seed");
    sim->add_option("--out", sim_out, "Output directory");

    std::string fit_config, fit_family, fit_out = "run_out";
    std::uint64_t fit_seed = 0;
    auto* fit = app.add_subcommand("fit", "Fit a model family to a dataset");
    fit->add_option("--config", fit_config, "JSON config file")->required();
    auto* fit_family_opt = fit->add_option("--family", fit_family, "Override the model family");
    auto* fit_seed_opt = fit->add_option("--seed", fit_seed, "Override the MCMC base seed");
    fit->add_option("--out", fit_out, "Output directory");

    std::string dia_dir;
    auto* dia = app.add_subcommand("diagnose", "Recompute convergence diagnostics for a run");
    dia->add_option("run", dia_dir, "Run directory")->required();

    std::string cmp_a, cmp_b, cmp_out = "comparison.csv";
    auto* cmp = app.add_subcommand("compare", "Rank-compare genetic values of two runs");
    cmp->add_option("run_a", cmp_a, "First run directory")->required();
    cmp->add_option("run_b", cmp_b, "Second run directory")->required();
    cmp->add_option("--out", cmp_out, "Comparison CSV path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (sim->parsed()) {
            RunConfig cfg;
            if (sim_cfg_opt->count() > 0) cfg = load_config(sim_config);
            if (sim_seed_opt->count() > 0) cfg.sim.seed = sim_seed;
            cmd_simulate(cfg, sim_out);
        } else if (fit->parsed()) {
            RunConfig cfg = load_config(fit_config);
            if (fit_family_opt->count() > 0) cfg.model.family = family_from_string(fit_family);
            if (fit_seed_opt->count() > 0) cfg.model.mcmc.seed = fit_seed;
            cmd_fit(cfg, fit_out);
        } else if (dia->parsed()) {
            cmd_diagnose(dia_dir);
        } else if (cmp->parsed()) {
            cmd_compare(cmp_a, cmp_b, cmp_out);
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    } catch (const NumericalError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}

}  // namespace rfi
