#include "casekg/pipeline/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "casekg/kg/bundle.hpp"
#include "casekg/kg/splits.hpp"
#include "casekg/pipeline/fixtures.hpp"
#include "casekg/pipeline/pipeline.hpp"
#include "casekg/text.hpp"

namespace casekg::pipeline {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct UsageError : Error {
    using Error::Error;
};

struct GlobalOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> ablations;
    bool online_refine = false;
    std::optional<int> workers;
    bool timing = false;
};

PipelineConfig resolve_config(const GlobalOptions& g) {
    PipelineConfig c = g.config_path.empty() ? PipelineConfig{} : load_config(g.config_path);
    if (g.seed) {
        c.seed = *g.seed;
        c.gnn.train.seed = *g.seed;
    }
    for (const auto& a : g.ablations) {
        if (a == "no-case") {
            c.with_cases = false;
        } else if (a == "no-asso") {
            c.with_assoc = false;
        } else {
            throw UsageError("--ablation takes no-case or no-asso, not '" + a + "'");
        }
    }
    if (g.online_refine) c.online_refine = true;
    if (g.workers) c.workers = *g.workers;
    if (g.timing) c.record_timing = true;
    c.validate();
    return c;
}

std::string require_path(const std::string& path, const char* what) {
    if (path.empty()) throw UsageError(std::string("no ") + what + " path; set it in the config file");
    return path;
}

void ensure_parent(const std::string& path) {
    const auto parent = fs::path(path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
}

std::ofstream open_out(const std::string& path) {
    ensure_parent(path);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    return out;
}

std::string output_path(const PipelineConfig& c, const std::string& given, const std::string& name) {
    if (!given.empty()) return given;
    const std::string dir = c.data.output_dir.empty() ? std::string(".") : c.data.output_dir;
    return (fs::path(dir) / name).string();
}

std::vector<double> parse_values(const std::string& list) {
    std::vector<double> out;
    for (const auto& item : text::split(list, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::logic_error&) {
            throw UsageError("not a number: '" + item + "'");
        }
    }
    if (out.empty()) throw UsageError("empty value list");
    return out;
}

void apply_param(PipelineConfig& c, const std::string& param, double value) {
    if (param == "lambda") {
        c.lambda = value;
    } else if (param == "k") {
        c.k = static_cast<std::size_t>(value);
    } else if (param == "paths") {
        c.paths = static_cast<int>(value);
    } else if (param == "candidates") {
        c.candidates = static_cast<int>(value);
    } else {
        throw UsageError("cannot sweep '" + param + "'; use lambda, k, paths or candidates");
    }
    c.validate();
}

std::string primary_metric(kg::TaskMode mode) { return mode == kg::TaskMode::multiclass ? "accuracy" : "ndcg_at_5"; }

void write_records(const EvaluationResult& result, const Pipeline& p, const std::string& path) {
    auto out = open_out(path);
    for (const auto& r : result.records) out << r.to_json(p.label_names(), p.config().task_mode).dump() << '\n';
}

std::string format_value(double v) {
    std::ostringstream s;
    s << v;
    return s.str();
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Case-based drug interaction prediction over a knowledge graph", "casekg"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions g;
    app.add_option("--config", g.config_path, "Pipeline config (JSON)");
    app.add_option("--seed", g.seed, "Override the config seed");
    app.add_option("--ablation", g.ablations, "no-case or no-asso (repeatable)");
    app.add_flag("--online-refine", g.online_refine, "Insert resolved cases while evaluating train/valid splits");
    app.add_option("--workers", g.workers, "Evaluation worker threads")->check(CLI::PositiveNumber);
    app.add_flag("--timing", g.timing, "Store per-stage timings in records");

    std::string graph_path, dataset_path, labels_path, out_path;
    auto* ingest = app.add_subcommand("ingest", "Load graph and dataset files and write a binary bundle");
    ingest->add_option("--graph", graph_path, "Triple file");
    ingest->add_option("--dataset", dataset_path, "Interaction file");
    ingest->add_option("--labels", labels_path, "Label vocabulary");
    ingest->add_option("--out", out_path, "Bundle path");

    std::string import_path;
    auto* split = app.add_subcommand("split", "Make or import the emerging-drug splits");
    split->add_option("--import", import_path, "Existing split file");
    split->add_option("--out", out_path, "Split file to write");

    auto* train = app.add_subcommand("train-gnn", "Train the pair encoder on the training split");

    double gc_epsilon = 1e-5, gc_tolerance = 1e-4;
    std::size_t gc_coordinates = 50, gc_inits = 3;
    auto* gradcheck = app.add_subcommand("grad-check", "Compare analytic and finite-difference gradients");
    gradcheck->add_option("--epsilon", gc_epsilon)->check(CLI::Range(1e-7, 1e-3));
    gradcheck->add_option("--tolerance", gc_tolerance)->check(CLI::PositiveNumber);
    gradcheck->add_option("--coordinates", gc_coordinates)->check(CLI::PositiveNumber);
    gradcheck->add_option("--inits", gc_inits, "Random initializations")->check(CLI::PositiveNumber);

    auto* build = app.add_subcommand("build-repo", "Seed the case repository from training pairs");

    std::string drug_a, drug_b;
    auto* predict = app.add_subcommand("predict", "Predict one pair and print its record");
    predict->add_option("--drug-a", drug_a)->required();
    predict->add_option("--drug-b", drug_b)->required();

    std::string split_name, records_path, report_path, sweep, csv_path;
    auto* evaluate = app.add_subcommand("evaluate", "Score a split and write records and a metrics report");
    evaluate->add_option("--split", split_name, "train, s1-test, s2-valid, ...")->required();
    evaluate->add_option("--records", records_path, "Records file (JSON lines)");
    evaluate->add_option("--report", report_path, "Metrics report (JSON)");
    evaluate->add_option("--sweep", sweep, "param=v1,v2,... over lambda, k, paths or candidates");
    evaluate->add_option("--csv", csv_path, "Sweep output (param,value,metric)");

    auto* refine_cmd = app.add_subcommand("refine", "Compact the repository to per-category medoids");
    refine_cmd->add_option("--out", out_path, "Repository to write (default: in place)");

    std::string lambdas = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1";
    std::optional<std::size_t> top_k;
    auto* racc = app.add_subcommand("retrieval-acc", "Majority-vote retrieval accuracy across lambda");
    racc->add_option("--split", split_name, "Query split")->required();
    racc->add_option("--lambdas", lambdas, "Comma-separated lambda values");
    racc->add_option("--k", top_k, "Cases per query")->check(CLI::PositiveNumber);
    racc->add_option("--csv", csv_path, "Also write the table here");

    std::string fixture_kind, fixture_dir;
    PlantedSpec planted;
    auto* fixture = app.add_subcommand("make-fixture", "Write a synthetic task with a config file");
    fixture->add_option("kind", fixture_kind, "planted")->required()->check(CLI::IsMember({"planted"}));
    fixture->add_option("--dir", fixture_dir)->required();
    fixture->add_option("--pairs", planted.pairs)->check(CLI::PositiveNumber);
    fixture->add_option("--classes", planted.classes)->check(CLI::PositiveNumber);

    std::vector<std::string> argv_store{"casekg"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_store) argv.push_back(a.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (fixture->parsed()) {
            planted.seed = g.seed.value_or(0);
            out << write_planted_fixture(fixture_dir, planted) << '\n';
            return 0;
        }

        PipelineConfig config = resolve_config(g);

        if (ingest->parsed()) {
            if (!graph_path.empty()) config.data.graph = graph_path;
            if (!dataset_path.empty()) config.data.dataset = dataset_path;
            if (!labels_path.empty()) config.data.labels = labels_path;
            if (!out_path.empty()) config.data.bundle = out_path;
            kg::Workspace ws;
            if (config.data.dataset.empty()) {
                ws.kg = kg::load_triples(require_path(config.data.graph, "graph"), ws.registry);
            } else {
                PipelineConfig raw = config;
                raw.data.bundle.clear();
                ws = load_workspace(raw);
            }
            json counts = {{"entities", ws.kg.entity_count()},
                           {"relations", ws.kg.relation_count()},
                           {"triples", ws.kg.triple_count()}};
            if (!config.data.dataset.empty()) {
                counts["pairs"] = ws.dataset.size();
                counts["interaction_types"] = ws.dataset.relation_count();
                counts["drugs"] = ws.dataset.drugs().size();
            }
            if (!config.data.bundle.empty() && !config.data.dataset.empty()) {
                ensure_parent(config.data.bundle);
                kg::save_bundle(ws, config.data.bundle);
                counts["bundle"] = config.data.bundle;
            }
            out << counts.dump(2) << '\n';
            return 0;
        }

        if (split->parsed()) {
            if (!import_path.empty()) config.data.splits = import_path;
            Pipeline p(config);
            const auto dest = out_path.empty() ? require_path(config.data.splits, "splits") : out_path;
            ensure_parent(dest);
            kg::save_splits(p.splits(), dest);
            const auto& s = p.splits();
            out << json{{"emerging_drugs", s.emerging_drugs.size()}, {"train", s.train.size()},
                        {"s0-valid", s.valid_s0.size()},             {"s0-test", s.test_s0.size()},
                        {"s1-valid", s.valid_s1.size()},             {"s1-test", s.test_s1.size()},
                        {"s2-valid", s.valid_s2.size()},             {"s2-test", s.test_s2.size()}}
                       .dump(2)
                << '\n';
            return 0;
        }

        Pipeline p(config);

        if (train->parsed()) {
            const auto result = p.train_gnn();
            const auto examples = gnn::make_examples(p.workspace().dataset, p.splits().train);
            const auto features = p.features_for(p.splits().train);
            const double acc = gnn::training_accuracy(p.params(), p.graph(), examples, features, {true});
            const auto path = require_path(config.data.checkpoint, "checkpoint");
            ensure_parent(path);
            gnn::save_checkpoint(p.params(), config_to_json(config), path);
            out << json{{"epochs", result.epoch_loss.size()},
                        {"final_loss", result.epoch_loss.empty() ? 0.0 : result.epoch_loss.back()},
                        {"train_accuracy", acc},
                        {"checkpoint", path}}
                       .dump(2)
                << '\n';
            return 0;
        }

        if (gradcheck->parsed()) {
            const auto& train_idx = p.splits().train;
            if (train_idx.empty()) throw Error("training split is empty");
            const auto features = p.features_for(train_idx);
            const auto examples = gnn::make_examples(p.workspace().dataset, train_idx);
            const gnn::GnnShape shape{config.layers, config.gnn.hidden, features.dim(),
                                      static_cast<int>(p.graph().relation_count()),
                                      static_cast<int>(p.workspace().dataset.relation_count())};
            const gnn::EncodeOptions encode{config.gnn.train.exclude_direct_interaction};
            json runs = json::array();
            double worst = 0.0;
            bool passed = true;
            for (std::size_t i = 0; i < gc_inits; ++i) {
                const auto params = gnn::GnnParams::initialize(shape, config.gnn.activation, config.seed + i);
                // Prefer a pair the encoder actually reaches; a zero encoding checks nothing.
                const gnn::TrainingExample* ex = &examples.front();
                for (const auto& e : examples) {
                    if (!gnn::encode_pair(params, p.graph(), e.u, e.v, features.at(e.u), features.at(e.v), encode)
                             .is_zero()) {
                        ex = &e;
                        break;
                    }
                }
                Rng rng(config.seed + i);
                const gnn::LossTarget target{ex->labels, gnn::sample_negatives(ex->labels, shape.labels,
                                                                                config.gnn.train.negatives_per_positive,
                                                                                rng)};
                gnn::GradCheckOptions opts;
                opts.epsilon = gc_epsilon;
                opts.tolerance = gc_tolerance;
                opts.coordinates = gc_coordinates;
                opts.seed = config.seed + i;
                opts.encode = encode;
                const auto r =
                    gnn::grad_check(params, p.graph(), features, *ex, target, config.gnn.train.loss_mode, opts);
                worst = std::max(worst, r.max_relative_error);
                passed = passed && r.passed;
                runs.push_back({{"init", i},
                                {"max_relative_error", r.max_relative_error},
                                {"coordinates", r.coordinates_checked},
                                {"worst_tensor", r.worst_tensor}});
            }
            out << json{{"max_relative_error", worst}, {"tolerance", gc_tolerance}, {"passed", passed}, {"runs", runs}}
                       .dump(2)
                << '\n';
            return passed ? 0 : 1;
        }

        if (build->parsed()) {
            const auto result = p.build_repository();
            for (const auto& w : result.warnings) err << "warning: " << w << '\n';
            const auto path = require_path(config.data.repository, "repository");
            ensure_parent(path);
            cases::save_repository(result.repository, path);
            out << json{{"cases", result.repository.size()}, {"skipped", result.warnings.size()}, {"repository", path}}
                       .dump(2)
                << '\n';
            return 0;
        }

        if (predict->parsed()) {
            const auto record = p.predict_pair(p.drug(drug_a), p.drug(drug_b));
            out << record.to_json(p.label_names(), config.task_mode).dump(2) << '\n';
            return 0;
        }

        if (evaluate->parsed()) {
            if (!sweep.empty()) {
                const auto eq = sweep.find('=');
                if (eq == std::string::npos) throw UsageError("--sweep expects param=v1,v2,...");
                const std::string param = sweep.substr(0, eq);
                const auto values = parse_values(sweep.substr(eq + 1));
                const auto metric = primary_metric(config.task_mode);
                std::ostringstream table;
                table << std::setprecision(12) << "param,value,metric\n";
                for (const double v : values) {
                    apply_param(p.mutable_config(), param, v);
                    const auto result = p.run_evaluation(split_name);
                    table << param << ',' << format_value(v) << ',' << result.report.value(metric, 0.0) << '\n';
                }
                const auto path = output_path(config, csv_path, "sweep-" + param + "-" + split_name + ".csv");
                open_out(path) << table.str();
                out << table.str();
                return 0;
            }
            const auto result = p.run_evaluation(split_name);
            const auto rpath = output_path(config, records_path, "records-" + split_name + ".jsonl");
            write_records(result, p, rpath);
            const auto report = output_path(config, report_path, "report-" + split_name + ".json");
            open_out(report) << result.report.dump(2) << '\n';
            if (config.online_refine && !config.data.repository.empty()) {
                cases::save_repository(p.repository(), config.data.repository);
            }
            out << result.report.dump(2) << '\n';
            return 0;
        }

        if (refine_cmd->parsed()) {
            cases::RefinementReport report;
            const auto refined = cases::refine(p.repository(), &report);
            const auto path = out_path.empty() ? require_path(config.data.repository, "repository") : out_path;
            ensure_parent(path);
            cases::save_repository(refined, path);
            out << cases::report_json(report, &p.label_names()) << '\n';
            return 0;
        }

        if (racc->parsed()) {
            const auto values = parse_values(lambdas);
            const auto queries = p.retrieval_queries(split_name);
            if (queries.empty()) throw Error("split " + split_name + " is empty");
            const std::size_t k = top_k.value_or(config.k);
            std::ostringstream table;
            table << std::setprecision(12) << "param,value,metric\n";
            for (const double l : values) {
                if (!(l >= 0.0 && l <= 1.0)) throw UsageError("lambda must lie in [0, 1]");
                table << "lambda," << format_value(l) << ','
                      << cases::retrieval_majority_accuracy(p.repository(), queries, l, k) << '\n';
            }
            if (!csv_path.empty()) open_out(csv_path) << table.str();
            out << table.str();
            return 0;
        }
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n' << app.help();
        return 2;
    } catch (const StageError& e) {
        err << "error in stage " << e.stage() << ": " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

int run_cli(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run_cli(args, std::cout, std::cerr);
}

}  // namespace casekg::pipeline
