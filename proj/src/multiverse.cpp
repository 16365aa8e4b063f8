#include "specverse/multiverse.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "specverse/csv.hpp"
#include "specverse/error.hpp"
#include "specverse/stats.hpp"

namespace specverse {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Universe specification
// ---------------------------------------------------------------------------

namespace {

const std::vector<std::string> kKnownDimensions = {
    "disruption_index", "citation_window", "citation_count",
    "reference_count",  "outliers",        "estimator",
    "nr_mode"};

void apply_option(ModelSpec& spec, const std::string& dimension, const std::string& option) {
    if (dimension == "disruption_index") {
        if (option.rfind("DI", 0) != 0) {
            throw schema_error("disruption_index option must look like 'DI3', got '" + option + "'");
        }
        spec.dv.b = std::stoi(option.substr(2));
        if (spec.dv.b < 1) throw schema_error("disruption_index threshold must be >= 1");
    } else if (dimension == "citation_window") {
        spec.dv.window = WindowSpec::parse(option);
    } else if (dimension == "citation_count") {
        if (option == "included") {
            spec.log_cites = true;
        } else if (option == "excluded") {
            spec.log_cites = false;
        } else {
            throw schema_error("citation_count option must be included|excluded");
        }
    } else if (dimension == "reference_count") {
        if (option == "included") {
            spec.log_refs = true;
        } else if (option == "excluded") {
            spec.log_refs = false;
        } else {
            throw schema_error("reference_count option must be included|excluded");
        }
    } else if (dimension == "outliers") {
        if (option == "included") {
            spec.exclude_outliers = false;
        } else if (option == "excluded") {
            spec.exclude_outliers = true;
        } else {
            throw schema_error("outliers option must be included|excluded");
        }
    } else if (dimension == "estimator") {
        if (option == "pooled" || option == "regression") {
            spec.estimator = Estimator::pooled;
        } else if (option == "author_fixed_effects") {
            spec.estimator = Estimator::author_fixed_effects;
        } else {
            throw schema_error("estimator option must be pooled|author_fixed_effects");
        }
    } else if (dimension == "nr_mode") {
        spec.dv.nr_mode = parse_nr_mode(option);
    } else {
        throw schema_error("unknown universe dimension '" + dimension + "'");
    }
}

ModelSpec base_model_spec(const UniverseSpec& universe) {
    ModelSpec spec;
    spec.dv.nr_mode = universe.nr_mode;
    spec.outlier_rule = universe.outlier_rule;
    spec.year_dummies = false;
    spec.field_dummies = false;
    for (const auto& cov : universe.fixed_covariates) {
        if (cov == "year_dummies") {
            spec.year_dummies = true;
        } else if (cov == "field_dummies") {
            spec.field_dummies = true;
        } else {
            throw schema_error("unknown fixed covariate '" + cov + "'");
        }
    }
    spec.team_coding = TeamCoding::continuous;
    return spec;
}

void finalize_model_spec(ModelSpec& spec) {
    // FE models carry author-clustered SEs; pooled models default to HC1.
    spec.se_type = spec.estimator == Estimator::author_fixed_effects ? SeType::cluster_author
                                                                     : SeType::hc1;
}

}  // namespace

std::size_t UniverseSpec::size() const {
    std::size_t n = 1;
    for (const auto& d : dimensions) n *= d.options.size();
    return n;
}

void UniverseSpec::validate() const {
    if (dimensions.empty()) throw schema_error("universe has no dimensions");
    for (const auto& d : dimensions) {
        if (std::find(kKnownDimensions.begin(), kKnownDimensions.end(), d.name) ==
            kKnownDimensions.end()) {
            throw schema_error("unknown universe dimension '" + d.name + "'");
        }
        if (d.options.empty()) {
            throw schema_error("dimension '" + d.name + "' has no options");
        }
        for (std::size_t i = 0; i < d.options.size(); ++i) {
            for (std::size_t j = i + 1; j < d.options.size(); ++j) {
                if (d.options[i] == d.options[j]) {
                    throw schema_error("dimension '" + d.name + "' repeats option '" +
                                       d.options[i] + "'");
                }
            }
        }
        if (std::find(d.options.begin(), d.options.end(), d.reference) == d.options.end()) {
            throw schema_error("dimension '" + d.name + "': reference '" + d.reference +
                               "' is not one of its options");
        }
    }
    if (!(alpha > 0.0 && alpha < 1.0)) throw schema_error("alpha must be in (0,1)");
}

UniverseSpec UniverseSpec::from_json_file(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw io_error("cannot open '" + file.string() + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return from_json_text(text.str(), file.string());
}

UniverseSpec UniverseSpec::from_json_text(const std::string& text, const std::string& source) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw schema_error(source + ": " + e.what());
    }
    try {
        UniverseSpec spec;
        spec.name = doc.value("name", "universe");
        for (const auto& d : doc.at("dimensions")) {
            UniverseDimension dim;
            dim.name = d.at("name").get<std::string>();
            for (const auto& o : d.at("options")) dim.options.push_back(o.get<std::string>());
            dim.reference = d.contains("reference") ? d.at("reference").get<std::string>()
                                                    : dim.options.front();
            spec.dimensions.push_back(std::move(dim));
        }
        if (doc.contains("fixed_covariates")) {
            for (const auto& c : doc.at("fixed_covariates")) {
                spec.fixed_covariates.push_back(c.get<std::string>());
            }
        }
        if (doc.contains("nr_mode")) spec.nr_mode = parse_nr_mode(doc.at("nr_mode").get<std::string>());
        if (doc.contains("alpha")) spec.alpha = doc.at("alpha").get<double>();
        if (doc.contains("min_papers_per_author")) {
            spec.min_papers_per_author = doc.at("min_papers_per_author").get<int>();
        }
        if (doc.contains("outlier_rule")) {
            const auto& r = doc.at("outlier_rule");
            spec.outlier_rule.max_refs = r.value("max_refs", 200);
            spec.outlier_rule.max_cites = r.value("max_cites", 200);
            if (r.contains("window")) {
                spec.outlier_rule.window = WindowSpec::parse(r.at("window").get<std::string>());
            }
        }
        if (doc.contains("benchmark")) {
            const auto& b = doc.at("benchmark");
            spec.benchmark_label = b.value("name", "benchmark");
            std::map<std::string, std::string> cell;
            for (const auto& [key, value] : b.at("cell").items()) {
                cell[key] = value.get<std::string>();
            }
            spec.benchmark = std::move(cell);
        }
        if (doc.contains("infeasible")) {
            for (const auto& entry : doc.at("infeasible")) {
                std::map<std::string, std::string> cell;
                for (const auto& [key, value] : entry.items()) cell[key] = value.get<std::string>();
                spec.infeasible.push_back(std::move(cell));
            }
        }
        spec.validate();
        return spec;
    } catch (const json::exception& e) {
        throw schema_error(source + ": " + e.what());
    }
}

std::vector<ResolvedModel> enumerate_universe(const UniverseSpec& universe) {
    universe.validate();
    const std::size_t total = universe.size();
    const std::size_t dims = universe.dimensions.size();

    std::size_t id_width = 1;
    for (std::size_t t = total; t >= 10; t /= 10) ++id_width;

    std::vector<ResolvedModel> models;
    models.reserve(total);
    std::vector<std::size_t> idx(dims, 0);
    for (std::size_t m = 0; m < total; ++m) {
        ResolvedModel model;
        model.option_idx = idx;
        std::string digits = std::to_string(m);
        if (digits.size() < id_width) digits.insert(0, id_width - digits.size(), '0');
        model.id = "m" + digits;

        model.spec = base_model_spec(universe);
        for (std::size_t d = 0; d < dims; ++d) {
            apply_option(model.spec, universe.dimensions[d].name,
                         universe.dimensions[d].options[idx[d]]);
        }
        finalize_model_spec(model.spec);
        model.spec.label = model.id;

        for (const auto& cell : universe.infeasible) {
            bool match = true;
            for (const auto& [dim_name, option] : cell) {
                bool found = false;
                for (std::size_t d = 0; d < dims; ++d) {
                    if (universe.dimensions[d].name == dim_name) {
                        found = universe.dimensions[d].options[idx[d]] == option;
                        break;
                    }
                }
                if (!found) {
                    match = false;
                    break;
                }
            }
            if (match) {
                model.infeasible = true;
                break;
            }
        }
        models.push_back(std::move(model));

        // mixed radix increment, last dimension fastest
        for (std::size_t d = dims; d-- > 0;) {
            if (++idx[d] < universe.dimensions[d].options.size()) break;
            idx[d] = 0;
        }
    }
    return models;
}

namespace {

ModelSpec resolve_benchmark(const UniverseSpec& universe) {
    ModelSpec spec = base_model_spec(universe);
    for (const auto& [dimension, option] : *universe.benchmark) {
        apply_option(spec, dimension, option);
    }
    finalize_model_spec(spec);
    spec.label = universe.benchmark_label;
    return spec;
}

}  // namespace

std::vector<ScoreVariant> required_variants(const UniverseSpec& universe) {
    std::vector<ScoreVariant> variants;
    auto add = [&](const ScoreVariant& v) {
        if (std::find(variants.begin(), variants.end(), v) == variants.end()) {
            variants.push_back(v);
        }
    };
    for (const auto& model : enumerate_universe(universe)) add(model.spec.dv);
    if (universe.benchmark) add(resolve_benchmark(universe).dv);
    return variants;
}

std::size_t EstimateSet::k_ok() const {
    std::size_t n = 0;
    for (const auto& r : rows) {
        if (r.status == ModelStatus::ok) ++n;
    }
    return n;
}

EstimateSet run_universe(const Corpus& corpus, const ScoreMatrix& scores,
                         const UniverseSpec& universe, const RunOptions& options) {
    EstimateSet set;
    set.universe = universe;

    const auto models = enumerate_universe(universe);

    {
        std::vector<std::string> missing;
        for (const auto& v : required_variants(universe)) {
            if (!scores.find_variant(v)) missing.push_back(v.to_string());
        }
        if (!missing.empty()) {
            std::string joined;
            for (const auto& m : missing) {
                if (!joined.empty()) joined += ", ";
                joined += m;
            }
            throw usage_error("score matrix lacks DV variants required by the universe: " + joined);
        }
    }

    SampleView sample;
    sample.papers.assign(scores.papers().begin(), scores.papers().end());

    const bool needs_panel =
        universe.benchmark
            ? resolve_benchmark(universe).estimator == Estimator::author_fixed_effects
            : false;
    bool any_fe = needs_panel;
    for (const auto& m : models) {
        if (m.spec.estimator == Estimator::author_fixed_effects) {
            any_fe = true;
            break;
        }
    }
    AuthorPaperPanel panel;
    if (any_fe) panel = build_panel(sample, corpus, universe.min_papers_per_author);

    auto run_one = [&](const ModelSpec& spec, const std::string& id,
                       const std::vector<std::size_t>& option_idx, bool infeasible) {
        ModelRow row;
        row.id = id;
        row.option_idx = option_idx;
        if (infeasible) {
            row.status = ModelStatus::failed;
            row.failure_reason = "infeasible cell";
            return row;
        }
        try {
            const FitResult fit = run_model(corpus, scores, spec, sample, &panel);
            const auto rows = summarize_fit(fit, universe.alpha);
            bool found = false;
            for (const auto& r : rows) {
                if (r.term == "team_size") {
                    row.estimate = r.estimate;
                    row.se = r.se;
                    row.p = r.p;
                    found = true;
                    break;
                }
            }
            if (!found) throw numeric_error("fit has no team_size coefficient");
            row.n = fit.n;
            row.n_clusters = fit.n_clusters;
            row.r_squared = fit.r_squared;
            row.status = ModelStatus::ok;
        } catch (const std::exception& e) {
            row.status = ModelStatus::failed;
            row.failure_reason = e.what();
        }
        return row;
    };

    set.rows.resize(models.size());
    const int workers = std::max(1, options.workers);
    if (workers == 1 || models.size() < 2) {
        for (std::size_t m = 0; m < models.size(); ++m) {
            set.rows[m] = run_one(models[m].spec, models[m].id, models[m].option_idx,
                                  models[m].infeasible);
        }
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (;;) {
                const std::size_t m = next.fetch_add(1);
                if (m >= models.size()) return;
                set.rows[m] = run_one(models[m].spec, models[m].id, models[m].option_idx,
                                      models[m].infeasible);
            }
        };
        std::vector<std::thread> threads;
        for (int w = 0; w < workers; ++w) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }

    if (universe.benchmark) {
        const ModelSpec spec = resolve_benchmark(universe);
        set.benchmark = run_one(spec, "benchmark", {}, false);
    }
    return set;
}

// ---------------------------------------------------------------------------
// Multiverse statistics
// ---------------------------------------------------------------------------

MultiverseSummary summarize(const EstimateSet& set) { return summarize(set, set.universe.alpha); }

MultiverseSummary summarize(const EstimateSet& set, double alpha) {
    MultiverseSummary summary;
    summary.k = set.rows.size();
    summary.alpha = alpha;

    std::vector<double> estimates;
    estimates.reserve(set.rows.size());
    for (const auto& row : set.rows) {
        if (row.status == ModelStatus::ok) estimates.push_back(row.estimate);
    }
    summary.k_ok = estimates.size();
    if (summary.k_ok == 0) throw numeric_error("no successful models in the estimate set");

    summary.b_mean = mean(estimates);
    summary.v_m = population_variance(estimates);
    summary.model_sd = std::sqrt(summary.v_m);
    sign_stability(set, alpha, &summary.signs);
    return summary;
}

double sign_stability(const EstimateSet& set, double alpha, SignTable* table) {
    SignTable t;
    for (const auto& row : set.rows) {
        if (row.status != ModelStatus::ok) continue;
        const bool significant = row.p < alpha;
        if (row.estimate < 0.0) {
            (significant ? t.negative_significant : t.negative_ns)++;
        } else {
            (significant ? t.positive_significant : t.positive_ns)++;
        }
    }
    if (table) *table = t;
    const auto total = t.total();
    return total == 0 ? 0.0
                      : static_cast<double>(t.negative_significant) / static_cast<double>(total);
}

namespace {

std::size_t dimension_index(const UniverseSpec& universe, const std::string& dimension) {
    for (std::size_t d = 0; d < universe.dimensions.size(); ++d) {
        if (universe.dimensions[d].name == dimension) return d;
    }
    throw usage_error("no dimension named '" + dimension + "' in the universe");
}

}  // namespace

std::vector<InfluenceStat> influence(const EstimateSet& set, const std::string& dimension) {
    const auto& universe = set.universe;
    const std::size_t d = dimension_index(universe, dimension);
    const auto& dim = universe.dimensions[d];

    // Index rows by their option tuple; check the set is full factorial.
    const std::size_t dims = universe.dimensions.size();
    std::vector<std::size_t> radix(dims);
    for (std::size_t i = 0; i < dims; ++i) radix[i] = universe.dimensions[i].options.size();

    auto flat_index = [&](const std::vector<std::size_t>& idx) {
        std::size_t f = 0;
        for (std::size_t i = 0; i < dims; ++i) f = f * radix[i] + idx[i];
        return f;
    };

    std::vector<const ModelRow*> by_cell(universe.size(), nullptr);
    for (const auto& row : set.rows) {
        if (row.option_idx.size() != dims) {
            throw usage_error("estimate set rows do not match the universe dimensions");
        }
        by_cell[flat_index(row.option_idx)] = &row;
    }
    {
        std::vector<std::string> missing;
        std::vector<std::size_t> idx(dims, 0);
        for (std::size_t m = 0; m < universe.size(); ++m) {
            if (!by_cell[m]) {
                std::string cell;
                for (std::size_t i = 0; i < dims; ++i) {
                    if (!cell.empty()) cell += "/";
                    cell += universe.dimensions[i].options[idx[i]];
                }
                missing.push_back(cell);
                if (missing.size() >= 5) break;
            }
            for (std::size_t i = dims; i-- > 0;) {
                if (++idx[i] < radix[i]) break;
                idx[i] = 0;
            }
        }
        if (!missing.empty()) {
            std::string joined;
            for (const auto& m : missing) {
                if (!joined.empty()) joined += ", ";
                joined += m;
            }
            throw usage_error("estimate set is not full factorial; missing cells: " + joined);
        }
    }

    const auto ref_it = std::find(dim.options.begin(), dim.options.end(), dim.reference);
    const auto ref_idx = static_cast<std::size_t>(ref_it - dim.options.begin());

    std::optional<double> benchmark_scale;
    if (set.benchmark && set.benchmark->status == ModelStatus::ok &&
        set.benchmark->estimate != 0.0) {
        benchmark_scale = std::fabs(set.benchmark->estimate);
    }

    std::vector<InfluenceStat> stats;
    for (std::size_t v = 0; v < dim.options.size(); ++v) {
        if (v == ref_idx) continue;
        InfluenceStat stat;
        stat.dimension = dimension;
        stat.option = dim.options[v];

        // Enumerate all combinations of the other dimensions; `other_idx`
        // position j addresses dimension j (skipping d).
        std::vector<std::size_t> other_dims;
        for (std::size_t i = 0; i < dims; ++i) {
            if (i != d) other_dims.push_back(i);
        }
        double sum = 0.0;
        std::size_t pairs = 0;
        std::vector<std::size_t> other_idx(other_dims.size(), 0);
        const std::size_t other_cells = universe.size() / radix[d];
        std::vector<std::size_t> full_with(dims), full_without(dims);
        for (std::size_t m = 0; m < other_cells; ++m) {
            for (std::size_t j = 0; j < other_dims.size(); ++j) {
                full_with[other_dims[j]] = other_idx[j];
                full_without[other_dims[j]] = other_idx[j];
            }
            full_with[d] = v;
            full_without[d] = ref_idx;
            const ModelRow* a = by_cell[flat_index(full_with)];
            const ModelRow* b = by_cell[flat_index(full_without)];
            if (a->status == ModelStatus::ok && b->status == ModelStatus::ok) {
                sum += a->estimate - b->estimate;
                ++pairs;
            }
            for (std::size_t j = other_dims.size(); j-- > 0;) {
                if (++other_idx[j] < radix[other_dims[j]]) break;
                other_idx[j] = 0;
            }
        }
        stat.n_pairs = pairs;
        stat.delta = pairs > 0 ? sum / static_cast<double>(pairs) : 0.0;
        if (benchmark_scale) stat.percent_of_benchmark = 100.0 * stat.delta / *benchmark_scale;
        stats.push_back(std::move(stat));
    }
    return stats;
}

std::vector<InfluenceStat> influence_all(const EstimateSet& set) {
    std::vector<InfluenceStat> all;
    for (const auto& dim : set.universe.dimensions) {
        if (dim.options.size() < 2) continue;
        auto stats = influence(set, dim.name);
        all.insert(all.end(), stats.begin(), stats.end());
    }
    return all;
}

std::pair<ModelRow, ModelRow> extremes(const EstimateSet& set) {
    const ModelRow* min_row = nullptr;
    const ModelRow* max_row = nullptr;
    for (const auto& row : set.rows) {
        if (row.status != ModelStatus::ok) continue;
        if (!min_row || row.estimate < min_row->estimate) min_row = &row;
        if (!max_row || row.estimate > max_row->estimate) max_row = &row;
    }
    if (!min_row) throw numeric_error("no successful models in the estimate set");
    return {*min_row, *max_row};
}

double author_effect_gap(std::span<const double> alpha_hat, double p_high, double p_low) {
    if (alpha_hat.size() < 10) {
        throw numeric_error("author effect percentiles need at least 10 authors");
    }
    std::vector<double> values(alpha_hat.begin(), alpha_hat.end());
    const double hi = percentile(values, p_high);
    const double lo = percentile(values, p_low);
    return hi - lo;
}

// ---------------------------------------------------------------------------
// Export / reload
// ---------------------------------------------------------------------------

namespace {

std::string sanitize(const std::string& text) {
    std::string out = text;
    for (char& c : out) {
        if (c == ',' || c == '\n' || c == '\r' || c == '\t') c = ' ';
    }
    return out;
}

void write_model_rows(std::ostream& out, const UniverseSpec& universe,
                      const std::vector<ModelRow>& rows) {
    out << "model_id";
    for (const auto& d : universe.dimensions) out << ',' << d.name;
    out << ",estimate,se,p,n,status\n";
    for (const auto& row : rows) {
        out << row.id;
        for (std::size_t d = 0; d < universe.dimensions.size(); ++d) {
            out << ',';
            if (d < row.option_idx.size()) {
                out << universe.dimensions[d].options[row.option_idx[d]];
            }
        }
        if (row.status == ModelStatus::ok) {
            out << ',' << format_double(row.estimate) << ',' << format_double(row.se) << ','
                << format_double(row.p) << ',' << row.n << ",ok\n";
        } else {
            out << ",,,," << row.n << ",failed: " << sanitize(row.failure_reason) << '\n';
        }
    }
}

json universe_to_json(const UniverseSpec& universe) {
    json u;
    u["name"] = universe.name;
    u["dimensions"] = json::array();
    for (const auto& d : universe.dimensions) {
        json dim;
        dim["name"] = d.name;
        dim["options"] = d.options;
        dim["reference"] = d.reference;
        u["dimensions"].push_back(dim);
    }
    u["fixed_covariates"] = universe.fixed_covariates;
    u["nr_mode"] = to_string(universe.nr_mode);
    u["alpha"] = universe.alpha;
    u["min_papers_per_author"] = universe.min_papers_per_author;
    json rule;
    rule["max_refs"] = universe.outlier_rule.max_refs;
    rule["max_cites"] = universe.outlier_rule.max_cites;
    rule["window"] = universe.outlier_rule.window.to_string();
    u["outlier_rule"] = rule;
    if (universe.benchmark) {
        json b;
        b["name"] = universe.benchmark_label;
        b["cell"] = *universe.benchmark;
        u["benchmark"] = b;
    }
    return u;
}

}  // namespace

void export_results(const EstimateSet& set, const std::filesystem::path& out_dir,
                    std::vector<std::string>* warnings) {
    std::filesystem::create_directories(out_dir);
    const auto& universe = set.universe;

    {
        std::ofstream out(out_dir / "models.csv");
        if (!out) throw io_error("cannot write '" + (out_dir / "models.csv").string() + "'");
        write_model_rows(out, universe, set.rows);
    }
    if (set.benchmark) {
        std::ofstream out(out_dir / "benchmark.csv");
        if (!out) throw io_error("cannot write '" + (out_dir / "benchmark.csv").string() + "'");
        out << "model_id,estimate,se,p,n,status\n";
        const auto& b = *set.benchmark;
        if (b.status == ModelStatus::ok) {
            out << b.id << ',' << format_double(b.estimate) << ',' << format_double(b.se) << ','
                << format_double(b.p) << ',' << b.n << ",ok\n";
        } else {
            out << b.id << ",,,," << b.n << ",failed: " << sanitize(b.failure_reason) << '\n';
        }
    }

    const MultiverseSummary summary = summarize(set);
    {
        json doc;
        doc["universe"] = universe_to_json(universe);
        doc["k"] = summary.k;
        doc["k_ok"] = summary.k_ok;
        doc["b_mean"] = summary.b_mean;
        doc["v_m"] = summary.v_m;
        doc["model_sd"] = summary.model_sd;
        doc["alpha"] = summary.alpha;
        doc["sign_table"] = {{"negative_significant", summary.signs.negative_significant},
                             {"negative_ns", summary.signs.negative_ns},
                             {"positive_significant", summary.signs.positive_significant},
                             {"positive_ns", summary.signs.positive_ns}};
        doc["negative_significant_share"] =
            summary.k_ok == 0 ? 0.0
                              : static_cast<double>(summary.signs.negative_significant) /
                                    static_cast<double>(summary.k_ok);
        if (set.benchmark && set.benchmark->status == ModelStatus::ok) {
            doc["benchmark"] = {{"name", universe.benchmark_label},
                                {"estimate", set.benchmark->estimate},
                                {"se", set.benchmark->se},
                                {"p", set.benchmark->p},
                                {"n", set.benchmark->n}};
        }
        std::ofstream out(out_dir / "summary.json");
        if (!out) throw io_error("cannot write '" + (out_dir / "summary.json").string() + "'");
        out << doc.dump(2) << '\n';
    }

    {
        // specification curve: successful models sorted by estimate
        std::vector<const ModelRow*> ok;
        for (const auto& row : set.rows) {
            if (row.status == ModelStatus::ok) ok.push_back(&row);
        }
        std::stable_sort(ok.begin(), ok.end(), [](const ModelRow* a, const ModelRow* b) {
            return a->estimate < b->estimate;
        });
        std::ofstream out(out_dir / "curve.csv");
        if (!out) throw io_error("cannot write '" + (out_dir / "curve.csv").string() + "'");
        out << "rank,model_id";
        for (const auto& d : universe.dimensions) out << ',' << d.name;
        out << ",estimate,se,p,significant\n";
        std::size_t rank = 1;
        for (const auto* row : ok) {
            out << rank++ << ',' << row->id;
            for (std::size_t d = 0; d < universe.dimensions.size(); ++d) {
                out << ',' << universe.dimensions[d].options[row->option_idx[d]];
            }
            out << ',' << format_double(row->estimate) << ',' << format_double(row->se) << ','
                << format_double(row->p) << ',' << (row->p < universe.alpha ? 1 : 0) << '\n';
        }
    }

    {
        std::ofstream out(out_dir / "influence.csv");
        if (!out) throw io_error("cannot write '" + (out_dir / "influence.csv").string() + "'");
        out << "dimension,option,delta,n_pairs,percent_of_benchmark\n";
        for (const auto& stat : influence_all(set)) {
            out << stat.dimension << ',' << stat.option << ',' << format_double(stat.delta) << ','
                << stat.n_pairs << ',';
            if (stat.percent_of_benchmark) out << format_double(*stat.percent_of_benchmark);
            out << '\n';
        }
    }

    {
        std::vector<double> estimates;
        for (const auto& row : set.rows) {
            if (row.status == ModelStatus::ok) estimates.push_back(row.estimate);
        }
        const auto kde = gaussian_kde(estimates);
        if (kde.empty()) {
            if (warnings) {
                warnings->push_back("density export skipped: degenerate estimate distribution");
            }
        } else {
            std::ofstream out(out_dir / "density.csv");
            if (!out) throw io_error("cannot write '" + (out_dir / "density.csv").string() + "'");
            out << "x,density\n";
            for (const auto& pt : kde) {
                out << format_double(pt.x) << ',' << format_double(pt.density) << '\n';
            }
        }
    }
}

EstimateSet load_estimate_set(const std::filesystem::path& out_dir) {
    EstimateSet set;
    {
        std::ifstream in(out_dir / "summary.json");
        if (!in) throw io_error("cannot open '" + (out_dir / "summary.json").string() + "'");
        json doc;
        try {
            doc = json::parse(in);
            const auto& u = doc.at("universe");
            UniverseSpec universe;
            universe.name = u.value("name", "universe");
            for (const auto& d : u.at("dimensions")) {
                UniverseDimension dim;
                dim.name = d.at("name").get<std::string>();
                for (const auto& o : d.at("options")) dim.options.push_back(o.get<std::string>());
                dim.reference = d.at("reference").get<std::string>();
                universe.dimensions.push_back(std::move(dim));
            }
            for (const auto& c : u.value("fixed_covariates", json::array())) {
                universe.fixed_covariates.push_back(c.get<std::string>());
            }
            universe.nr_mode = parse_nr_mode(u.value("nr_mode", "consistent"));
            universe.alpha = u.value("alpha", 0.05);
            universe.min_papers_per_author = u.value("min_papers_per_author", 2);
            if (u.contains("outlier_rule")) {
                const auto& r = u.at("outlier_rule");
                universe.outlier_rule.max_refs = r.value("max_refs", 200);
                universe.outlier_rule.max_cites = r.value("max_cites", 200);
                universe.outlier_rule.window =
                    WindowSpec::parse(r.value("window", std::string("5y")));
            }
            if (u.contains("benchmark")) {
                universe.benchmark_label = u.at("benchmark").value("name", "benchmark");
                std::map<std::string, std::string> cell;
                for (const auto& [key, value] : u.at("benchmark").at("cell").items()) {
                    cell[key] = value.get<std::string>();
                }
                universe.benchmark = std::move(cell);
            }
            set.universe = std::move(universe);
        } catch (const json::exception& e) {
            throw schema_error((out_dir / "summary.json").string() + ": " + e.what());
        }
    }

    const auto models_file = out_dir / "models.csv";
    std::ifstream in(models_file);
    if (!in) throw io_error("cannot open '" + models_file.string() + "'");
    DelimitedReader reader(in, models_file.string());
    const auto id_col = reader.require_column("model_id");
    const auto est_col = reader.require_column("estimate");
    const auto se_col = reader.require_column("se");
    const auto p_col = reader.require_column("p");
    const auto n_col = reader.require_column("n");
    const auto status_col = reader.require_column("status");
    std::vector<std::size_t> dim_cols;
    for (const auto& d : set.universe.dimensions) dim_cols.push_back(reader.require_column(d.name));

    std::vector<std::string> row;
    while (reader.next_row(row)) {
        ModelRow model;
        model.id = row[id_col];
        for (std::size_t d = 0; d < dim_cols.size(); ++d) {
            const auto& dim = set.universe.dimensions[d];
            const auto& option = row[dim_cols[d]];
            const auto it = std::find(dim.options.begin(), dim.options.end(), option);
            if (it == dim.options.end()) {
                throw schema_error(models_file.string() + ":" +
                                   std::to_string(reader.line_number()) + ": option '" + option +
                                   "' not in dimension '" + dim.name + "'");
            }
            model.option_idx.push_back(static_cast<std::size_t>(it - dim.options.begin()));
        }
        model.n = static_cast<std::size_t>(reader.parse_int(row[n_col], "n"));
        if (row[status_col] == "ok") {
            model.status = ModelStatus::ok;
            model.estimate = reader.parse_double(row[est_col], "estimate");
            model.se = reader.parse_double(row[se_col], "se");
            model.p = reader.parse_double(row[p_col], "p");
        } else if (row[status_col].rfind("failed", 0) == 0) {
            model.status = ModelStatus::failed;
            auto reason = row[status_col].substr(6);
            if (reason.rfind(": ", 0) == 0) reason = reason.substr(2);
            model.failure_reason = reason;
        } else {
            throw schema_error(models_file.string() + ":" + std::to_string(reader.line_number()) +
                               ": bad status '" + row[status_col] + "'");
        }
        set.rows.push_back(std::move(model));
    }

    const auto benchmark_file = out_dir / "benchmark.csv";
    if (std::filesystem::exists(benchmark_file)) {
        std::ifstream bin(benchmark_file);
        DelimitedReader breader(bin, benchmark_file.string());
        const auto bid = breader.require_column("model_id");
        const auto best = breader.require_column("estimate");
        const auto bse = breader.require_column("se");
        const auto bp = breader.require_column("p");
        const auto bn = breader.require_column("n");
        const auto bstatus = breader.require_column("status");
        std::vector<std::string> brow;
        if (breader.next_row(brow)) {
            ModelRow b;
            b.id = brow[bid];
            b.n = static_cast<std::size_t>(breader.parse_int(brow[bn], "n"));
            if (brow[bstatus] == "ok") {
                b.status = ModelStatus::ok;
                b.estimate = breader.parse_double(brow[best], "estimate");
                b.se = breader.parse_double(brow[bse], "se");
                b.p = breader.parse_double(brow[bp], "p");
            } else {
                b.status = ModelStatus::failed;
            }
            set.benchmark = std::move(b);
        }
    }
    return set;
}

}  // namespace specverse
