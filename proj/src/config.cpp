#include "scl/config.hpp"

#include "scl/verify.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

namespace scl::cli {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ConfigError(path + ": " + what);
}

const json& member(const json& j, const std::string& path, const char* key) {
    if (!j.is_object()) fail(path, "expected an object");
    const auto it = j.find(key);
    if (it == j.end()) fail(path + "." + key, "missing required field");
    return *it;
}

void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) fail(path, "expected an object");
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) { ok = true; break; }
        if (!ok) fail(path + "." + key, "unknown key");
    }
}

double get_finite(const json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) fail(path, "must be finite");
    return v;
}

int get_int(const json& j, const std::string& path) {
    if (!j.is_number_integer()) fail(path, "expected an integer");
    return j.get<int>();
}

std::string get_string(const json& j, const std::string& path) {
    if (!j.is_string()) fail(path, "expected a string");
    return j.get<std::string>();
}

std::vector<double> get_vector(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) fail(path, "expected a nonempty array of numbers");
    std::vector<double> v;
    for (std::size_t i = 0; i < j.size(); ++i)
        v.push_back(get_finite(j[i], path + "[" + std::to_string(i) + "]"));
    return v;
}

std::vector<double> get_matrix(const json& j, const std::string& path, int& rows, int& cols) {
    if (!j.is_array() || j.empty()) fail(path, "expected a nonempty matrix");
    rows = static_cast<int>(j.size());
    std::vector<double> flat;
    cols = -1;
    for (int i = 0; i < rows; ++i) {
        const auto row = get_vector(j[i], path + "[" + std::to_string(i) + "]");
        if (cols < 0) cols = static_cast<int>(row.size());
        if (static_cast<int>(row.size()) != cols) fail(path, "ragged matrix");
        flat.insert(flat.end(), row.begin(), row.end());
    }
    return flat;
}

goals::Distortion parse_distortion(const json& j, const std::string& path) {
    check_keys(j, path, {"kind", "gamma"});
    const auto kind = get_string(member(j, path, "kind"), path + ".kind");
    try {
        if (kind == "identity") return goals::Distortion::identity();
        if (kind == "power")
            return goals::Distortion::power(get_finite(member(j, path, "gamma"), path + ".gamma"));
        if (kind == "tversky_kahneman")
            return goals::Distortion::tversky_kahneman(
                get_finite(member(j, path, "gamma"), path + ".gamma"));
    } catch (const std::invalid_argument& e) {
        fail(path, e.what());
    }
    fail(path + ".kind", "unknown distortion kind '" + kind + "'");
}

goals::Utility parse_utility(const json& j, const std::string& path) {
    check_keys(j, path, {"kind", "a"});
    const auto kind = get_string(member(j, path, "kind"), path + ".kind");
    auto a = [&] { return get_finite(member(j, path, "a"), path + ".a"); };
    if (kind == "identity") return goals::Utility::identity();
    if (kind == "capped_linear") return goals::Utility::capped_linear(a());
    if (kind == "power") return goals::Utility::power(a());
    if (kind == "exponential_saturating") return goals::Utility::exponential_saturating(a());
    if (kind == "indicator_at_least") return goals::Utility::indicator_at_least(a());
    fail(path + ".kind", "unknown utility kind '" + kind + "'");
}

goals::CPTSpec parse_cpt(const json& j, const std::string& path) {
    check_keys(j, path, {"w_plus", "w_minus", "u_plus", "u_minus", "loss_cap"});
    goals::CPTSpec spec;
    spec.w_plus = parse_distortion(member(j, path, "w_plus"), path + ".w_plus");
    spec.w_minus = parse_distortion(member(j, path, "w_minus"), path + ".w_minus");
    spec.u_plus = parse_utility(member(j, path, "u_plus"), path + ".u_plus");
    spec.u_minus = parse_utility(member(j, path, "u_minus"), path + ".u_minus");
    if (j.contains("loss_cap")) spec.loss_cap = get_finite(j["loss_cap"], path + ".loss_cap");
    try {
        spec.validate();
    } catch (const std::invalid_argument& e) {
        fail(path, e.what());
    }
    return spec;
}

search::MarketInstance parse_market(const json& j, const std::string& path) {
    check_keys(j, path, {"price", "lambda", "endowment"});
    search::MarketInstance inst{market::PriceModel{}, TransactionCostSpec(2, {0, 0, 0, 0}),
                                Cone::from_costs(TransactionCostSpec::uniform(2, 0.1)),
                                {}};

    const auto& pj = member(j, path, "price");
    const std::string ppath = path + ".price";
    check_keys(pj, ppath, {"kind", "sigma", "mu", "correlation"});
    const auto kind = get_string(member(pj, ppath, "kind"), ppath + ".kind");
    market::PriceModel model;
    if (kind == "martingale_gbm")
        model.kind = market::PriceModel::Kind::martingale_gbm;
    else if (kind == "drifted_gbm")
        model.kind = market::PriceModel::Kind::drifted_gbm;
    else
        fail(ppath + ".kind", "unknown price kind '" + kind + "'");
    model.sigma = get_vector(member(pj, ppath, "sigma"), ppath + ".sigma");
    model.dim = static_cast<int>(model.sigma.size());
    if (pj.contains("mu"))
        model.mu = get_vector(pj["mu"], ppath + ".mu");
    else
        model.mu.assign(model.dim, 0.0);
    if (pj.contains("correlation")) {
        int r = 0, c = 0;
        model.correlation = get_matrix(pj["correlation"], ppath + ".correlation", r, c);
        if (r != model.dim || c != model.dim) fail(ppath + ".correlation", "must be dim x dim");
    } else {
        model.correlation.assign(static_cast<std::size_t>(model.dim) * model.dim, 0.0);
        for (int i = 0; i < model.dim; ++i)
            model.correlation[static_cast<std::size_t>(i) * model.dim + i] = 1.0;
    }
    try {
        model.validate();
    } catch (const std::invalid_argument& e) {
        fail(ppath, e.what());
    }

    int lr = 0, lc = 0;
    const auto lam = get_matrix(member(j, path, "lambda"), path + ".lambda", lr, lc);
    if (lr != model.dim || lc != model.dim) fail(path + ".lambda", "must be dim x dim");
    for (int i = 0; i < lr; ++i)
        for (int c2 = 0; c2 < lc; ++c2) {
            const std::string cell =
                path + ".lambda[" + std::to_string(i) + "][" + std::to_string(c2) + "]";
            const double v = lam[static_cast<std::size_t>(i) * lc + c2];
            if (i == c2 && v != 0.0) fail(cell, "diagonal transaction costs must be zero");
            if (v < 0.0) fail(cell, "transaction costs must be nonnegative");
        }
    TransactionCostSpec costs(model.dim, lam);

    const auto endowment = get_vector(member(j, path, "endowment"), path + ".endowment");
    if (static_cast<int>(endowment.size()) != model.dim)
        fail(path + ".endowment", "must have one entry per asset");

    Cone cone = Cone::from_costs(costs);
    if (!cone.contains(endowment))
        fail(path + ".endowment", "endowment must lie in the solvency cone");

    inst.model = std::move(model);
    inst.costs = std::move(costs);
    inst.cone = std::move(cone);
    inst.endowment = endowment;
    return inst;
}

storage::RunningCost parse_running_cost(const json& j, const std::string& path) {
    check_keys(j, path, {"kind", "value", "weight", "cap", "center"});
    const auto kind = get_string(member(j, path, "kind"), path + ".kind");
    try {
        if (kind == "zero") return storage::RunningCost::zero();
        if (kind == "constant")
            return storage::RunningCost::constant(get_finite(member(j, path, "value"), path + ".value"));
        if (kind == "quadratic_capped") {
            std::vector<double> center;
            if (j.contains("center")) center = get_vector(j["center"], path + ".center");
            return storage::RunningCost::quadratic_capped(
                get_finite(member(j, path, "weight"), path + ".weight"),
                get_finite(member(j, path, "cap"), path + ".cap"), std::move(center));
        }
    } catch (const std::invalid_argument& e) {
        fail(path, e.what());
    }
    fail(path + ".kind", "unknown running cost kind '" + kind + "'");
}

storage::TradeCost parse_trade_cost(const json& j, const std::string& path) {
    check_keys(j, path, {"c0", "c1"});
    std::vector<double> c0 = get_vector(member(j, path, "c0"), path + ".c0");
    std::vector<double> c1;
    if (j.contains("c1"))
        c1 = get_vector(j["c1"], path + ".c1");
    else
        c1.assign(c0.size(), 0.0);
    if (c1.size() != c0.size()) fail(path, "c0 and c1 must have equal length");
    return storage::TradeCost::linear(std::move(c0), std::move(c1));
}

storage::TerminalCost parse_terminal_cost(const json& j, const std::string& path) {
    check_keys(j, path, {"kind", "weight", "threshold", "scale"});
    const auto kind = get_string(member(j, path, "kind"), path + ".kind");
    try {
        if (kind == "zero") return storage::TerminalCost::zero();
        if (kind == "soft_threshold")
            return storage::TerminalCost::soft_threshold(
                get_finite(member(j, path, "weight"), path + ".weight"),
                get_finite(member(j, path, "threshold"), path + ".threshold"),
                get_finite(member(j, path, "scale"), path + ".scale"));
    } catch (const std::invalid_argument& e) {
        fail(path, e.what());
    }
    fail(path + ".kind", "unknown terminal cost kind '" + kind + "'");
}

search::StorageInstance parse_storage(const json& j, const std::string& path) {
    check_keys(j, path,
               {"demand", "a_plus", "a_minus", "running_cost", "trade_cost_plus",
                "trade_cost_minus", "terminal_cost", "budget"});
    const auto& dj = member(j, path, "demand");
    const std::string dpath = path + ".demand";
    check_keys(dj, dpath, {"kind", "x0", "mu", "sigma", "rate", "mean"});
    const auto kind = get_string(member(dj, dpath, "kind"), dpath + ".kind");
    storage::DemandModel demand;
    try {
        if (kind == "brownian_drift") {
            auto x0 = get_vector(member(dj, dpath, "x0"), dpath + ".x0");
            std::vector<double> mu;
            if (dj.contains("mu"))
                mu = get_vector(dj["mu"], dpath + ".mu");
            else
                mu.assign(x0.size(), 0.0);
            demand = storage::DemandModel::brownian(
                std::move(x0), std::move(mu), get_vector(member(dj, dpath, "sigma"), dpath + ".sigma"));
        } else if (kind == "ornstein_uhlenbeck") {
            demand = storage::DemandModel::ou(
                get_vector(member(dj, dpath, "x0"), dpath + ".x0"),
                get_finite(member(dj, dpath, "rate"), dpath + ".rate"),
                get_vector(member(dj, dpath, "mean"), dpath + ".mean"),
                get_vector(member(dj, dpath, "sigma"), dpath + ".sigma"));
        } else {
            fail(dpath + ".kind", "unknown demand kind '" + kind + "'");
        }
    } catch (const std::invalid_argument& e) {
        fail(dpath, e.what());
    }

    search::StorageInstance inst{std::move(demand), storage::StorageCostSpec{}, 1.0};
    int r = 0, c = 0;
    inst.spec.a_plus = get_matrix(member(j, path, "a_plus"), path + ".a_plus", r, c);
    inst.spec.state_dim = r;
    inst.spec.control_dim = c;
    int r2 = 0, c2 = 0;
    inst.spec.a_minus = get_matrix(member(j, path, "a_minus"), path + ".a_minus", r2, c2);
    if (r2 != r || c2 != c) fail(path + ".a_minus", "must match a_plus shape");
    if (r != inst.demand.dim) fail(path + ".a_plus", "row count must equal the demand dimension");
    inst.spec.g = parse_running_cost(member(j, path, "running_cost"), path + ".running_cost");
    inst.spec.h_plus = parse_trade_cost(member(j, path, "trade_cost_plus"), path + ".trade_cost_plus");
    inst.spec.h_minus =
        parse_trade_cost(member(j, path, "trade_cost_minus"), path + ".trade_cost_minus");
    inst.spec.terminal = parse_terminal_cost(member(j, path, "terminal_cost"), path + ".terminal_cost");
    inst.budget = get_finite(member(j, path, "budget"), path + ".budget");
    if (!(inst.budget > 0.0)) fail(path + ".budget", "must be positive");
    return inst;
}

search::MarketPolicy parse_market_menu_entry(const json& j, const std::string& path) {
    const auto kind = get_string(member(j, path, "kind"), path + ".kind");
    search::MarketPolicy p;
    if (kind == "band") {
        check_keys(j, path, {"kind", "lower", "upper", "target"});
        p.kind = search::MarketPolicy::Kind::band;
        p.lower = get_vector(member(j, path, "lower"), path + ".lower");
        p.upper = get_vector(member(j, path, "upper"), path + ".upper");
        p.target = get_vector(member(j, path, "target"), path + ".target");
        if (p.lower.size() != p.upper.size() || p.lower.size() != p.target.size())
            fail(path, "band arrays must have equal length");
        return p;
    }
    if (kind == "rebalance") {
        check_keys(j, path, {"kind", "fraction", "width"});
        p.kind = search::MarketPolicy::Kind::rebalance;
        p.fraction = get_vector(member(j, path, "fraction"), path + ".fraction");
        p.width = get_finite(member(j, path, "width"), path + ".width");
        return p;
    }
    fail(path + ".kind", "unknown market policy kind '" + kind + "'");
}

search::StoragePolicy parse_storage_menu_entry(const json& j, const std::string& path) {
    const auto kind = get_string(member(j, path, "kind"), path + ".kind");
    search::StoragePolicy p;
    if (kind == "band") {
        check_keys(j, path, {"kind", "lower", "upper", "target"});
        p.kind = search::StoragePolicy::Kind::band;
        p.lower = get_finite(member(j, path, "lower"), path + ".lower");
        p.upper = get_finite(member(j, path, "upper"), path + ".upper");
        p.target = get_finite(member(j, path, "target"), path + ".target");
        if (!(p.lower <= p.upper) || p.target < p.lower || p.target > p.upper)
            fail(path, "band needs lower <= target <= upper");
        return p;
    }
    if (kind == "threshold_jump") {
        check_keys(j, path, {"kind", "node", "size", "threshold", "if_below", "leg"});
        p.kind = search::StoragePolicy::Kind::threshold_jump;
        p.node = get_int(member(j, path, "node"), path + ".node");
        p.size = get_finite(member(j, path, "size"), path + ".size");
        p.threshold = get_finite(member(j, path, "threshold"), path + ".threshold");
        if (j.contains("if_below")) {
            if (!j["if_below"].is_boolean()) fail(path + ".if_below", "expected a boolean");
            p.if_below = j["if_below"].get<bool>();
        }
        const auto leg = get_string(member(j, path, "leg"), path + ".leg");
        if (leg == "plus")
            p.leg_plus = true;
        else if (leg == "minus")
            p.leg_plus = false;
        else
            fail(path + ".leg", "must be 'plus' or 'minus'");
        if (p.size < 0.0) fail(path + ".size", "must be nonnegative");
        return p;
    }
    fail(path + ".kind", "unknown storage policy kind '" + kind + "'");
}

} // namespace

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    ExperimentConfig cfg;
    check_keys(j, "config", {"schema", "model", "goal", "policy", "search", "verify", "output"});
    cfg.schema = get_int(member(j, "config", "schema"), "config.schema");
    if (cfg.schema != 1) fail("config.schema", "unsupported schema version");

    // --- model
    const auto& mj = member(j, "config", "model");
    check_keys(mj, "config.model", {"kind", "grid", "market", "storage"});
    const auto mkind = get_string(member(mj, "config.model", "kind"), "config.model.kind");
    const auto& gj = member(mj, "config.model", "grid");
    check_keys(gj, "config.model.grid", {"horizon", "steps"});
    const double horizon = get_finite(member(gj, "config.model.grid", "horizon"), "config.model.grid.horizon");
    const int steps = get_int(member(gj, "config.model.grid", "steps"), "config.model.grid.steps");
    if (!(horizon > 0.0)) fail("config.model.grid.horizon", "must be positive");
    if (steps < 1) fail("config.model.grid.steps", "must be at least 1");
    cfg.problem.grid = TimeGrid(horizon, steps);

    if (mkind == "market") {
        cfg.problem.kind = search::ModelKind::market;
        if (mj.contains("storage")) fail("config.model.storage", "unexpected for a market model");
        cfg.problem.market = parse_market(member(mj, "config.model", "market"), "config.model.market");
    } else if (mkind == "storage") {
        cfg.problem.kind = search::ModelKind::storage;
        if (mj.contains("market")) fail("config.model.market", "unexpected for a storage model");
        cfg.problem.storage =
            parse_storage(member(mj, "config.model", "storage"), "config.model.storage");
        try {
            cfg.problem.storage->spec.validate(horizon);
        } catch (const std::invalid_argument& e) {
            fail("config.model.storage", e.what());
        }
    } else {
        fail("config.model.kind", "must be 'market' or 'storage'");
    }

    // --- goal
    const auto& goalj = member(j, "config", "goal");
    check_keys(goalj, "config.goal",
               {"kind", "utility", "threshold", "distortion", "cpt", "benchmark"});
    const auto gkind = get_string(member(goalj, "config.goal", "kind"), "config.goal.kind");

    auto parse_benchmark = [&](bool market_model) {
        std::string bkind = market_model ? "constant" : "uncontrolled_cost";
        double bvalue = 0.0;
        if (goalj.contains("benchmark")) {
            const auto& bj = goalj["benchmark"];
            check_keys(bj, "config.goal.benchmark", {"kind", "value"});
            bkind = get_string(member(bj, "config.goal.benchmark", "kind"), "config.goal.benchmark.kind");
            if (bj.contains("value"))
                bvalue = get_finite(bj["value"], "config.goal.benchmark.value");
        }
        return std::make_pair(bkind, bvalue);
    };

    if (cfg.problem.kind == search::ModelKind::market) {
        search::MarketGoal mg;
        if (gkind == "expectation") {
            mg.kind = search::MarketGoal::Kind::expectation;
            if (goalj.contains("utility"))
                mg.utility = parse_utility(goalj["utility"], "config.goal.utility");
        } else if (gkind == "goal_reaching") {
            mg.kind = search::MarketGoal::Kind::goal_reaching;
            mg.threshold = get_finite(member(goalj, "config.goal", "threshold"), "config.goal.threshold");
        } else if (gkind == "yaari") {
            mg.kind = search::MarketGoal::Kind::yaari;
            mg.distortion = parse_distortion(member(goalj, "config.goal", "distortion"),
                                             "config.goal.distortion");
        } else if (gkind == "cpt") {
            mg.kind = search::MarketGoal::Kind::cpt;
            mg.cpt = parse_cpt(member(goalj, "config.goal", "cpt"), "config.goal.cpt");
            const auto [bkind, bvalue] = parse_benchmark(true);
            if (bkind == "constant")
                mg.benchmark = search::MarketGoal::Benchmark::constant;
            else if (bkind == "endowment_liquidation")
                mg.benchmark = search::MarketGoal::Benchmark::endowment_liquidation;
            else
                fail("config.goal.benchmark.kind", "market benchmarks: constant, endowment_liquidation");
            mg.benchmark_value = bvalue;
        } else {
            fail("config.goal.kind", "unknown goal kind '" + gkind + "'");
        }
        cfg.problem.market_goal = std::move(mg);
    } else {
        search::StorageGoalSpec sg;
        if (gkind == "expectation") {
            sg.goal.kind = storage::StorageGoal::Kind::expectation;
        } else if (gkind == "goal_reaching") {
            sg.goal.kind = storage::StorageGoal::Kind::goal_reaching;
            sg.goal.threshold =
                get_finite(member(goalj, "config.goal", "threshold"), "config.goal.threshold");
        } else if (gkind == "cpt") {
            sg.goal.kind = storage::StorageGoal::Kind::cpt;
            sg.goal.cpt = parse_cpt(member(goalj, "config.goal", "cpt"), "config.goal.cpt");
            const auto [bkind, bvalue] = parse_benchmark(false);
            if (bkind == "constant")
                sg.benchmark = search::StorageGoalSpec::Benchmark::constant;
            else if (bkind == "uncontrolled_cost")
                sg.benchmark = search::StorageGoalSpec::Benchmark::uncontrolled_cost;
            else
                fail("config.goal.benchmark.kind", "storage benchmarks: constant, uncontrolled_cost");
            sg.benchmark_value = bvalue;
        } else {
            fail("config.goal.kind", "storage goals: expectation, goal_reaching, cpt");
        }
        cfg.problem.storage_goal = std::move(sg);
    }

    // --- policy family
    const auto& pj = member(j, "config", "policy");
    check_keys(pj, "config.policy", {"kind", "lo", "hi", "menu"});
    const auto pkind = get_string(member(pj, "config.policy", "kind"), "config.policy.kind");
    cfg.family.model = cfg.problem.kind;
    if (pkind == "band" || pkind == "rebalance") {
        cfg.family.kind = pkind == "band" ? search::PolicyFamily::Kind::band
                                          : search::PolicyFamily::Kind::rebalance;
        cfg.family.lo = get_vector(member(pj, "config.policy", "lo"), "config.policy.lo");
        cfg.family.hi = get_vector(member(pj, "config.policy", "hi"), "config.policy.hi");
        if (cfg.family.lo.size() != cfg.family.hi.size())
            fail("config.policy", "lo and hi must have equal length");
        if (pkind == "rebalance" && cfg.problem.kind != search::ModelKind::market)
            fail("config.policy.kind", "rebalance policies are market-only");
    } else if (pkind == "finite_menu") {
        cfg.family.kind = search::PolicyFamily::Kind::finite_menu;
        const auto& menu = member(pj, "config.policy", "menu");
        if (!menu.is_array() || menu.empty()) fail("config.policy.menu", "expected a nonempty array");
        for (std::size_t i = 0; i < menu.size(); ++i) {
            const std::string mpath = "config.policy.menu[" + std::to_string(i) + "]";
            if (cfg.problem.kind == search::ModelKind::market)
                cfg.family.market_menu.push_back(parse_market_menu_entry(menu[i], mpath));
            else
                cfg.family.storage_menu.push_back(parse_storage_menu_entry(menu[i], mpath));
        }
    } else {
        fail("config.policy.kind", "unknown policy kind '" + pkind + "'");
    }
    try {
        cfg.family.validate();
    } catch (const std::invalid_argument& e) {
        fail("config.policy", e.what());
    }

    // --- search
    const auto& sj = member(j, "config", "search");
    check_keys(sj, "config.search", {"budget", "n_paths", "master_seed", "grids", "sample_sizes"});
    cfg.search.budget = get_int(member(sj, "config.search", "budget"), "config.search.budget");
    cfg.search.n_paths = get_int(member(sj, "config.search", "n_paths"), "config.search.n_paths");
    if (cfg.search.budget < 1) fail("config.search.budget", "must be positive");
    if (cfg.search.n_paths < 2) fail("config.search.n_paths", "need at least two paths");
    if (sj.contains("master_seed")) {
        if (!sj["master_seed"].is_number_unsigned() && !sj["master_seed"].is_number_integer())
            fail("config.search.master_seed", "expected an integer");
        cfg.search.master_seed = sj["master_seed"].get<std::uint64_t>();
    }
    auto parse_int_list = [&](const char* key, std::vector<int>& out) {
        if (!sj.contains(key)) return;
        const auto& a = sj[key];
        const std::string apath = std::string("config.search.") + key;
        if (!a.is_array() || a.empty()) fail(apath, "expected a nonempty integer array");
        for (std::size_t i = 0; i < a.size(); ++i) {
            const int v = get_int(a[i], apath + "[" + std::to_string(i) + "]");
            if (v < 1) fail(apath, "entries must be positive");
            out.push_back(v);
        }
    };
    parse_int_list("grids", cfg.search.grids);
    parse_int_list("sample_sizes", cfg.search.sample_sizes);

    // --- verify (optional)
    if (j.contains("verify")) {
        const auto& vj = j["verify"];
        check_keys(vj, "config.verify",
                   {"metric_triples", "duality_points", "vb_strategies", "vb_paths",
                    "sm_strategies", "sm_paths"});
        auto opt = [&](const char* key, int& slot) {
            if (vj.contains(key)) {
                slot = get_int(vj[key], std::string("config.verify.") + key);
                if (slot < 1) fail(std::string("config.verify.") + key, "must be positive");
            }
        };
        opt("metric_triples", cfg.verify.metric_triples);
        opt("duality_points", cfg.verify.duality_points);
        opt("vb_strategies", cfg.verify.vb_strategies);
        opt("vb_paths", cfg.verify.vb_paths);
        opt("sm_strategies", cfg.verify.sm_strategies);
        opt("sm_paths", cfg.verify.sm_paths);
    }

    // --- output
    if (j.contains("output")) {
        const auto& oj = j["output"];
        check_keys(oj, "config.output", {"formats"});
        if (oj.contains("formats")) {
            for (const auto& f : oj["formats"]) {
                const auto s = get_string(f, "config.output.formats[]");
                if (s != "json" && s != "csv") fail("config.output.formats", "supported: json, csv");
                cfg.output_formats.push_back(s);
            }
        }
    }
    if (cfg.output_formats.empty()) cfg.output_formats = {"json", "csv"};
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

namespace {

void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::trunc | std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << content;
}

int run_simulate(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
    std::ostringstream csv;
    if (cfg.problem.kind == search::ModelKind::market) {
        const auto prices = market::simulate_prices(
            cfg.problem.market->model, cfg.problem.grid,
            rng::derive_seed(cfg.search.master_seed, "noise",
                             static_cast<std::uint64_t>(cfg.problem.grid.n_steps) * 1000003ull),
            cfg.search.n_paths);
        market::write_price_csv(prices, csv);
    } else {
        const auto demand = storage::simulate_demand(
            cfg.problem.storage->demand, cfg.problem.grid,
            rng::derive_seed(cfg.search.master_seed, "noise",
                             static_cast<std::uint64_t>(cfg.problem.grid.n_steps) * 1000003ull),
            cfg.search.n_paths);
        storage::write_demand_csv(demand, csv);
    }
    write_file(out_dir / "paths.csv", csv.str());
    return 0;
}

int run_optimize(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
    search::SearchReport report;
    if (cfg.search.grids.size() > 1 || cfg.search.sample_sizes.size() > 1) {
        std::vector<int> grids = cfg.search.grids;
        if (grids.empty()) grids = {cfg.problem.grid.n_steps};
        std::vector<int> sizes = cfg.search.sample_sizes;
        if (sizes.empty()) sizes = {cfg.search.n_paths};
        report = search::refinement_study(cfg.problem, cfg.family, grids, sizes,
                                          cfg.search.budget, cfg.search.master_seed);
    } else {
        report = search::optimize(cfg.problem, cfg.family, cfg.search.n_paths, cfg.search.budget,
                                  cfg.search.master_seed);
    }
    for (const auto& fmt : cfg.output_formats) {
        if (fmt == "json") write_file(out_dir / "report.json", report.to_json());
        if (fmt == "csv" && !report.refinement.empty())
            write_file(out_dir / "refinement.csv", report.refinement_csv());
    }
    return 0;
}

int run_verify(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
    if (cfg.problem.kind != search::ModelKind::market)
        throw ConfigError("config.model.kind: verify requires a market model");
    const auto& inst = *cfg.problem.market;
    const auto& vp = cfg.verify;
    const std::uint64_t seed = cfg.search.master_seed;

    const auto metric = verify::metric_axiom_suite(cfg.problem.grid, inst.model.dim,
                                                   vp.metric_triples, seed);
    const std::vector<TransactionCostSpec> specs{inst.costs};
    const auto duality = verify::duality_suite(specs, vp.duality_points, seed);
    const auto vb =
        verify::variation_bound_suite(inst, cfg.problem.grid, vp.vb_strategies, vp.vb_paths, seed);
    const auto sm = verify::supermartingale_suite(inst, cfg.problem.grid, vp.sm_strategies,
                                                  vp.sm_paths, seed);

    json out;
    out["metric_axioms"] = {{"pass", metric.pass},
                            {"max_symmetry_error", metric.max_symmetry_error},
                            {"max_triangle_violation", metric.max_triangle_violation},
                            {"seconds", metric.seconds},
                            {"n_triples", metric.n_triples}};
    out["duality"] = {{"pass", duality.pass},
                      {"max_primal_dual_gap", duality.max_primal_dual_gap},
                      {"max_identity_error", duality.max_identity_error},
                      {"n_points", duality.n_points}};
    out["variation_bound"] = {{"pass", vb.pass},     {"estimate", vb.estimate},
                              {"ci_lo", vb.ci_lo},   {"ci_hi", vb.ci_hi},
                              {"bound", vb.bound},   {"max_observed", vb.max_observed},
                              {"n", vb.n}};
    out["supermartingale"] = {{"pass", sm.pass},
                              {"strategies", sm.n_strategies},
                              {"strategies_failed", sm.strategies_failed},
                              {"violations", sm.total_violations},
                              {"worst_excess", sm.worst_excess}};
    const bool all_pass = metric.pass && duality.pass && vb.pass && sm.pass;
    out["pass"] = all_pass;
    write_file(out_dir / "verify.json", out.dump(2));
    return all_pass ? 0 : 3;
}

std::vector<FVPath> read_path_dump(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("path dump: empty file");
    int cols = 1;
    for (char ch : line)
        if (ch == ',') ++cols;
    const int dim = cols - 2;
    if (dim < 1 || line.rfind("path_id,t", 0) != 0)
        throw std::runtime_error("path dump: expected header path_id,t,...");

    std::map<long, std::pair<std::vector<double>, std::vector<double>>> groups;
    std::vector<long> order;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream row(line);
        std::string cell;
        long id = 0;
        double t = 0.0;
        std::vector<double> vals;
        int col = 0;
        while (std::getline(row, cell, ',')) {
            if (col == 0)
                id = std::strtol(cell.c_str(), nullptr, 10);
            else if (col == 1)
                t = std::strtod(cell.c_str(), nullptr);
            else
                vals.push_back(std::strtod(cell.c_str(), nullptr));
            ++col;
        }
        if (col != cols) throw std::runtime_error("path dump: ragged row");
        auto it = groups.find(id);
        if (it == groups.end()) {
            order.push_back(id);
            it = groups.emplace(id, std::make_pair(std::vector<double>{}, std::vector<double>{})).first;
        }
        it->second.first.push_back(t);
        it->second.second.insert(it->second.second.end(), vals.begin(), vals.end());
    }
    std::vector<FVPath> paths;
    for (long id : order) {
        auto& [times, values] = groups[id];
        if (times.size() < 2) throw std::runtime_error("path dump: path too short");
        const TimeGrid grid(times.back(), static_cast<int>(times.size()) - 1);
        paths.push_back(FVPath::from_values(grid, dim, std::move(values)));
    }
    return paths;
}

int run_metric(const ExperimentConfig&, const std::filesystem::path& out_dir) {
    const auto dump = out_dir / "paths.csv";
    std::ifstream in(dump);
    if (!in)
        throw std::runtime_error("metric: " + dump.string() + " not found (run simulate first)");
    const auto paths = read_path_dump(in);
    const auto matrix = mz_distance_matrix(paths, true);
    const int n = static_cast<int>(paths.size());
    std::ostringstream csv;
    csv << "i,j,mz\n";
    char buf[64];
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", matrix[static_cast<std::size_t>(i) * n + j]);
            csv << i << ',' << j << ',' << buf << "\n";
        }
    write_file(out_dir / "mz_matrix.csv", csv.str());
    return 0;
}

} // namespace

int run(const std::string& config_path, const std::string& out_dir, const std::string& mode,
        std::optional<std::uint64_t> seed_override) {
    try {
        ExperimentConfig cfg = ExperimentConfig::load(config_path);
        if (seed_override) cfg.search.master_seed = *seed_override;
        std::filesystem::path out(out_dir);
        std::filesystem::create_directories(out);
        if (mode == "simulate") return run_simulate(cfg, out);
        if (mode == "optimize") return run_optimize(cfg, out);
        if (mode == "verify") return run_verify(cfg, out);
        if (mode == "metric") return run_metric(cfg, out);
        std::cerr << "unknown mode '" << mode << "' (use simulate|optimize|verify|metric)\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace scl::cli
