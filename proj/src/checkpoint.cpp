#include "minn/checkpoint.hpp"

#include <fstream>

#include "minn/error.hpp"

#include "json.hpp"

namespace minn {

namespace {

using nlohmann::json;

json matrix_to_json(const Matrix& m) {
    return json{{"rows", m.rows}, {"cols", m.cols}, {"data", m.data}};
}

Matrix matrix_from_json(const json& j) {
    Matrix m;
    m.rows = j.at("rows").get<std::size_t>();
    m.cols = j.at("cols").get<std::size_t>();
    m.data = j.at("data").get<std::vector<double>>();
    if (m.data.size() != m.rows * m.cols) throw ShapeError("matrix data does not match its shape");
    return m;
}

} // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    json doc;
    doc["format_version"] = 1;
    doc["config"] = {{"input_dim", ckpt.config.input_dim},
                     {"hidden", ckpt.config.hidden},
                     {"embedding_dim", ckpt.config.embedding_dim},
                     {"attention_dim", ckpt.config.attention_dim},
                     {"pooling", to_string(ckpt.config.pooling)},
                     {"seed", ckpt.config.seed}};
    doc["train_seed"] = ckpt.train_seed;
    doc["normalizer"] = {{"means", ckpt.normalizer.means}, {"stds", ckpt.normalizer.stds}};

    json params;
    params["enc_w"] = json::array();
    params["enc_b"] = json::array();
    for (const auto& w : ckpt.params.enc_w) params["enc_w"].push_back(matrix_to_json(w));
    for (const auto& b : ckpt.params.enc_b) params["enc_b"].push_back(b);
    if (!ckpt.params.attention.w.empty()) {
        params["attention_V"] = matrix_to_json(ckpt.params.attention.V);
        params["attention_w"] = ckpt.params.attention.w;
    }
    params["head_w"] = ckpt.params.head_w;
    params["head_b"] = ckpt.params.head_b;
    doc["params"] = params;

    std::ofstream out(path);
    if (!out) throw Error("cannot write checkpoint '" + path.string() + "'");
    out << doc.dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open checkpoint '" + path.string() + "'");
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ParseError("checkpoint '" + path.string() + "': " + e.what());
    }

    try {
        if (doc.at("format_version").get<int>() != 1)
            throw ConfigError("unsupported checkpoint format version");

        Checkpoint ckpt;
        const json& c = doc.at("config");
        ckpt.config.input_dim = c.at("input_dim").get<std::size_t>();
        ckpt.config.hidden = c.at("hidden").get<std::array<std::size_t, 3>>();
        ckpt.config.embedding_dim = c.at("embedding_dim").get<std::size_t>();
        ckpt.config.attention_dim = c.at("attention_dim").get<std::size_t>();
        ckpt.config.pooling = pooling_kind_from_string(c.at("pooling").get<std::string>());
        ckpt.config.seed = c.at("seed").get<std::uint64_t>();
        ckpt.train_seed = doc.at("train_seed").get<std::uint64_t>();
        ckpt.normalizer.means = doc.at("normalizer").at("means").get<std::vector<double>>();
        ckpt.normalizer.stds = doc.at("normalizer").at("stds").get<std::vector<double>>();

        const json& p = doc.at("params");
        for (const auto& w : p.at("enc_w")) ckpt.params.enc_w.push_back(matrix_from_json(w));
        for (const auto& b : p.at("enc_b"))
            ckpt.params.enc_b.push_back(b.get<std::vector<double>>());
        if (p.contains("attention_V")) {
            ckpt.params.attention.V = matrix_from_json(p.at("attention_V"));
            ckpt.params.attention.w = p.at("attention_w").get<std::vector<double>>();
        }
        ckpt.params.head_w = p.at("head_w").get<std::vector<double>>();
        ckpt.params.head_b = p.at("head_b").get<double>();

        // shape validation against the stored config
        const std::array<std::size_t, 5> dims = {ckpt.config.input_dim, ckpt.config.hidden[0],
                                                 ckpt.config.hidden[1], ckpt.config.hidden[2],
                                                 ckpt.config.embedding_dim};
        if (ckpt.params.enc_w.size() != 4 || ckpt.params.enc_b.size() != 4)
            throw ShapeError("checkpoint must hold exactly 4 encoder layers");
        for (int k = 0; k < 4; ++k) {
            if (ckpt.params.enc_w[k].rows != dims[k + 1] || ckpt.params.enc_w[k].cols != dims[k])
                throw ShapeError("encoder layer " + std::to_string(k) +
                                 " weights do not match the config");
            if (ckpt.params.enc_b[k].size() != dims[k + 1])
                throw ShapeError("encoder layer " + std::to_string(k) +
                                 " biases do not match the config");
        }
        if (ckpt.config.needs_attention()) {
            if (ckpt.params.attention.V.rows != ckpt.config.attention_dim ||
                ckpt.params.attention.V.cols != ckpt.config.embedding_dim ||
                ckpt.params.attention.w.size() != ckpt.config.attention_dim)
                throw ShapeError("attention params do not match the config");
        }
        if (ckpt.params.head_w.size() != ckpt.config.embedding_dim)
            throw ShapeError("head weights do not match embedding_dim");
        if (!ckpt.normalizer.means.empty() &&
            (ckpt.normalizer.means.size() != ckpt.config.input_dim ||
             ckpt.normalizer.stds.size() != ckpt.config.input_dim))
            throw ShapeError("normalizer width does not match input_dim");
        return ckpt;
    } catch (const json::exception& e) {
        throw ParseError("checkpoint '" + path.string() + "': " + e.what());
    }
}

} // namespace minn
