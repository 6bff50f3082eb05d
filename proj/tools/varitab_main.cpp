// varitab command line: synthesis, column splits, training scenarios,
// prediction, and AUROC evaluation over CSV tables.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "varitab/checkpoint.hpp"
#include "varitab/csv.hpp"
#include "varitab/preprocess.hpp"
#include "varitab/synth.hpp"
#include "varitab/trainer.hpp"

namespace {

using namespace varitab;

uint64_t default_seed() {
    if (const char* env = std::getenv("VARITAB_SEED")) {
        return std::strtoull(env, nullptr, 10);
    }
    return 42;
}

std::string schema_path_for(const std::string& data_path, const std::string& explicit_path) {
    if (!explicit_path.empty()) return explicit_path;
    std::filesystem::path p(data_path);
    p.replace_extension(".schema");
    return p.string();
}

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> out;
    std::istringstream in(csv);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

TableDataset load_prepared(const std::string& data, const std::string& schema_path,
                           const std::string& label_column, bool require_labels) {
    auto schema = load_schema_manifest(schema_path);
    TableDataset ds;
    try {
        ds = load_csv(data, schema, /*has_header=*/true, label_column);
    } catch (const std::exception&) {
        if (require_labels) throw;
        ds = load_csv(data, schema, /*has_header=*/true, "");
    }
    if (require_labels && !ds.labels) {
        throw std::runtime_error("'" + data + "' has no '" + label_column + "' column");
    }
    return fit_normalization(apply_codebook(ds));
}

void write_predictions(const std::string& path, const std::vector<std::vector<double>>& dists) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write predictions '" + path + "'");
    const size_t classes = dists.empty() ? 2 : dists.front().size();
    if (classes == 2) {
        out << "row_index,score\n";
        for (size_t i = 0; i < dists.size(); ++i) out << i << ',' << dists[i][1] << '\n';
    } else {
        out << "row_index";
        for (size_t c = 0; c < classes; ++c) out << ",score_" << c;
        out << '\n';
        for (size_t i = 0; i < dists.size(); ++i) {
            out << i;
            for (double p : dists[i]) out << ',' << p;
            out << '\n';
        }
    }
}

struct CommonTrainFlags {
    double lr = 1e-4;
    int64_t batch = 64;
    int64_t epochs = 0;  // 0 = protocol default
    int64_t patience = 10;
    double val_fraction = 0.2;
    uint64_t seed = default_seed();
    int64_t dim = 128;
    int64_t heads = 8;
    int64_t layers = 2;

    void attach(CLI::App* cmd) {
        cmd->add_option("--lr", lr, "Adam learning rate");
        cmd->add_option("--batch", batch, "batch size");
        cmd->add_option("--epochs", epochs, "maximum epochs (default 100 / 50 pretraining)");
        cmd->add_option("--patience", patience, "early-stopping patience");
        cmd->add_option("--val-fraction", val_fraction, "held-out validation fraction");
        cmd->add_option("--seed", seed, "run seed (default $VARITAB_SEED or 42)");
        cmd->add_option("--dim", dim, "embedding dimension");
        cmd->add_option("--heads", heads, "attention heads");
        cmd->add_option("--layers", layers, "encoder layers");
    }

    TrainConfig config(int64_t default_epochs) const {
        TrainConfig cfg;
        cfg.learning_rate = lr;
        cfg.batch_size = batch;
        cfg.max_epochs = epochs > 0 ? epochs : default_epochs;
        cfg.patience = std::min(patience, cfg.max_epochs);
        cfg.eval_fraction = val_fraction;
        cfg.seed = seed;
        return cfg;
    }
};

int run(int argc, char** argv) {
    CLI::App app{"varitab: transferable tabular transformer"};
    app.require_subcommand(1);

    // ---- train ----
    auto* train_cmd = app.add_subcommand("train", "supervised training on one table");
    std::string data, schema, out, report, label_column = "label";
    CommonTrainFlags flags;
    train_cmd->add_option("--data", data, "training CSV")->required();
    train_cmd->add_option("--schema", schema, "schema manifest (default: data path with .schema)");
    train_cmd->add_option("--out", out, "checkpoint output path")->required();
    train_cmd->add_option("--report", report, "report CSV path (default: <out>.report.csv)");
    train_cmd->add_option("--label-column", label_column, "label column name");
    flags.attach(train_cmd);

    // ---- pretrain ----
    auto* pre_cmd = app.add_subcommand("pretrain", "contrastive pretraining on one or more tables");
    std::string pre_data, pre_schema, pre_out, pre_mode = "self";
    int64_t partitions = 2;
    double overlap = 0.0;
    bool exclude_self = false;
    CommonTrainFlags pre_flags;
    pre_cmd->add_option("--data", pre_data, "comma-separated CSV paths")->required();
    pre_cmd->add_option("--schema", pre_schema, "comma-separated schema manifests");
    pre_cmd->add_option("--out", pre_out, "checkpoint output path")->required();
    pre_cmd->add_option("--mode", pre_mode, "self | supervised")
        ->check(CLI::IsMember({"self", "supervised"}));
    pre_cmd->add_option("--partitions", partitions, "vertical partition count K");
    pre_cmd->add_option("--overlap", overlap, "partition overlap ratio");
    pre_cmd->add_flag("--exclude-self", exclude_self, "InfoNCE-style denominators");
    pre_cmd->add_option("--label-column", label_column, "label column name");
    pre_flags.attach(pre_cmd);

    // ---- finetune ----
    auto* ft_cmd = app.add_subcommand("finetune", "replace the head and train on a target table");
    std::string ft_model;
    CommonTrainFlags ft_flags;
    ft_cmd->add_option("--model", ft_model, "input checkpoint")->required();
    ft_cmd->add_option("--data", data, "target CSV")->required();
    ft_cmd->add_option("--schema", schema, "schema manifest");
    ft_cmd->add_option("--out", out, "checkpoint output path")->required();
    ft_cmd->add_option("--report", report, "report CSV path");
    ft_cmd->add_option("--label-column", label_column, "label column name");
    ft_flags.attach(ft_cmd);

    // ---- predict ----
    auto* pred_cmd = app.add_subcommand("predict", "zero-shot scores for a table");
    std::string pred_model, pred_out = "predictions.csv";
    pred_cmd->add_option("--model", pred_model, "checkpoint")->required();
    pred_cmd->add_option("--data", data, "CSV to score")->required();
    pred_cmd->add_option("--schema", schema, "schema manifest");
    pred_cmd->add_option("--out", pred_out, "prediction CSV path");

    // ---- eval ----
    auto* eval_cmd = app.add_subcommand("eval", "AUROC of a prediction CSV against labels");
    std::string scores_path;
    eval_cmd->add_option("--scores", scores_path, "prediction CSV from `predict`")->required();
    eval_cmd->add_option("--data", data, "labeled CSV")->required();
    eval_cmd->add_option("--schema", schema, "schema manifest");
    eval_cmd->add_option("--label-column", label_column, "label column name");

    // ---- split ----
    auto* split_cmd = app.add_subcommand("split", "column-split subsets of a table");
    std::string mode_str = "incremental", out_dir = ".";
    double split_overlap = 0.5;
    uint64_t split_seed = default_seed();
    split_cmd->add_option("--data", data, "source CSV")->required();
    split_cmd->add_option("--schema", schema, "schema manifest");
    split_cmd->add_option("--mode", mode_str, "incremental | transfer | zeroshot")
        ->check(CLI::IsMember({"incremental", "transfer", "zeroshot"}));
    split_cmd->add_option("--overlap", split_overlap, "column overlap ratio (transfer)");
    split_cmd->add_option("--seed", split_seed, "split seed");
    split_cmd->add_option("--out-dir", out_dir, "output directory");
    split_cmd->add_option("--label-column", label_column, "label column name");

    // ---- synth ----
    auto* synth_cmd = app.add_subcommand("synth", "generate synthetic benchmark tables");
    SynthSuiteSpec suite;
    std::string rows_csv = "1000";
    synth_cmd->add_option("--tables", suite.tables, "number of tables");
    synth_cmd->add_option("--rows", rows_csv, "comma-separated rows per table");
    synth_cmd->add_option("--cols", suite.columns, "columns per table");
    synth_cmd->add_option("--signal", suite.signal, "signal columns per table");
    synth_cmd->add_option("--shared-signal", suite.shared_signal, "shared signal columns");
    synth_cmd->add_option("--shared-noise", suite.shared_noise, "shared noise columns");
    synth_cmd->add_option("--strength", suite.strength, "signal strength in [0,1]");
    synth_cmd->add_option("--seed", suite.seed, "generator seed");
    synth_cmd->add_option("--out-dir", out_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    if (*train_cmd) {
        auto ds = load_prepared(data, schema_path_for(data, schema), label_column, true);
        ModelConfig mc{.dim = flags.dim, .heads = flags.heads, .layers = flags.layers,
                       .classes = std::max(2, ds.class_count()), .seed = flags.seed};
        ModelState model = ModelState::create(mc);
        TrainReport rep = train_supervised(model, ds, flags.config(100));
        save_checkpoint(model, out);
        rep.save_csv(report.empty() ? out + ".report.csv" : report);
        std::cout << "trained: " << rep.summary() << "\n";
        return 0;
    }

    if (*pre_cmd) {
        const auto files = split_list(pre_data);
        const auto schemas = split_list(pre_schema);
        const bool supervised = pre_mode == "supervised";
        std::vector<TableDataset> tables;
        for (size_t i = 0; i < files.size(); ++i) {
            const std::string sp =
                i < schemas.size() ? schemas[i] : schema_path_for(files[i], "");
            tables.push_back(load_prepared(files[i], sp, label_column, supervised));
        }
        ModelConfig mc{.dim = pre_flags.dim, .heads = pre_flags.heads, .layers = pre_flags.layers,
                       .classes = 2, .seed = pre_flags.seed};
        ModelState model = ModelState::create(mc);
        TrainConfig cfg = pre_flags.config(50);
        cfg.vpcl.partitions = partitions;
        cfg.vpcl.overlap_ratio = overlap;
        cfg.vpcl.seed = pre_flags.seed;
        cfg.vpcl_mode = supervised ? TrainConfig::VpclMode::supervised
                                   : TrainConfig::VpclMode::self_supervised;
        cfg.vpcl_options.exclude_self = exclude_self;
        TrainReport rep = pretrain_vpcl(model, tables, cfg);
        save_checkpoint(model, pre_out);
        std::cout << "pretrained: " << rep.summary() << "\n";
        return 0;
    }

    if (*ft_cmd) {
        auto ds = load_prepared(data, schema_path_for(data, schema), label_column, true);
        ModelState model = load_checkpoint(ft_model, LoadMode::extend);
        TrainReport rep = finetune(model, ds, ft_flags.config(100));
        save_checkpoint(model, out);
        rep.save_csv(report.empty() ? out + ".report.csv" : report);
        std::cout << "finetuned: " << rep.summary() << "\n";
        return 0;
    }

    if (*pred_cmd) {
        auto ds = load_prepared(data, schema_path_for(data, schema), "", false);
        ModelState model = load_checkpoint(pred_model, LoadMode::exact);
        write_predictions(pred_out, zero_shot_predict(model, ds));
        std::cout << "wrote " << ds.row_count() << " scores to " << pred_out << "\n";
        return 0;
    }

    if (*eval_cmd) {
        auto ds = load_prepared(data, schema_path_for(data, schema), label_column, true);
        std::ifstream in(scores_path);
        if (!in) throw std::runtime_error("cannot open scores '" + scores_path + "'");
        std::string line;
        std::getline(in, line);  // header
        std::vector<double> scores;
        while (std::getline(in, line)) {
            const size_t comma = line.find(',');
            if (comma == std::string::npos) continue;
            scores.push_back(std::stod(line.substr(comma + 1)));
        }
        const double auroc = evaluate_auroc(scores, *ds.labels);
        std::cout << "auroc " << auroc << "\n";
        return 0;
    }

    if (*split_cmd) {
        auto manifest = load_schema_manifest(schema_path_for(data, schema));
        TableDataset ds;
        try {
            ds = load_csv(data, manifest, true, label_column);
        } catch (const std::exception&) {
            ds = load_csv(data, manifest, true, "");
        }
        SplitSpec spec{.mode = parse_split_mode(mode_str), .seed = split_seed,
                       .overlap_ratio = split_overlap};
        std::filesystem::create_directories(out_dir);
        auto subsets = split_columns(ds, spec);
        for (size_t i = 0; i < subsets.size(); ++i) {
            const std::string base = out_dir + "/set" + std::to_string(i + 1);
            save_csv(subsets[i], base + ".csv", label_column);
            save_schema_manifest(subsets[i].schema, base + ".schema");
            std::cout << base << ".csv: " << subsets[i].row_count() << " rows, "
                      << subsets[i].column_count() << " columns\n";
        }
        return 0;
    }

    if (*synth_cmd) {
        std::vector<size_t> rows;
        for (const auto& r : split_list(rows_csv)) rows.push_back(std::stoull(r));
        while (static_cast<int>(rows.size()) < suite.tables) rows.push_back(rows.back());
        suite.rows = rows;
        std::filesystem::create_directories(out_dir);
        auto tables = make_synth_suite(suite);
        for (size_t i = 0; i < tables.size(); ++i) {
            const std::string base = out_dir + "/table" + std::to_string(i + 1);
            save_csv(tables[i].data, base + ".csv", "label");
            save_schema_manifest(tables[i].data.schema, base + ".schema");
            std::ofstream bayes(base + ".bayes.csv", std::ios::binary);
            bayes << "row_index,bayes\n";
            for (size_t r = 0; r < tables[i].bayes.size(); ++r) {
                bayes << r << ',' << tables[i].bayes[r] << '\n';
            }
            std::cout << base << ".csv: " << tables[i].data.row_count() << " rows\n";
        }
        return 0;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
