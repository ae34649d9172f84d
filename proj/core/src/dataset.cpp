#include "lscl/dataset.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "lscl/error.hpp"
#include "lscl/serialization.hpp"
#include "lscl/text.hpp"

namespace lscl {

using nlohmann::json;

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write '" + tmp.string() + "'");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw Error("short write to '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

namespace {

template <typename Fn>
void for_each_line(const std::filesystem::path& path, Fn&& fn) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open dataset '" + path.string() + "'");
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (text::trim(line).empty()) continue;
        fn(line, number);
    }
}

std::string line_error(const std::filesystem::path& path, std::size_t number, const std::string& what) {
    return path.filename().string() + ":" + std::to_string(number) + ": " + what;
}

}  // namespace

std::vector<QASample> load_dataset(const std::filesystem::path& path) {
    std::vector<QASample> samples;
    std::unordered_set<std::string> seen;
    for_each_line(path, [&](const std::string& line, std::size_t number) {
        QASample sample;
        try {
            sample = json::parse(line).get<QASample>();
            validate(sample);
        } catch (const json::exception& e) {
            throw ValidationError(line_error(path, number, std::string("malformed record: ") + e.what()));
        } catch (const ValidationError& e) {
            throw ValidationError(line_error(path, number, e.what()));
        }
        if (!seen.insert(sample.id).second) {
            throw ValidationError(line_error(path, number, "duplicate id '" + sample.id + "'"));
        }
        samples.push_back(std::move(sample));
    });
    return samples;
}

void write_dataset(const std::filesystem::path& path, std::span<const QASample> samples) {
    std::string out;
    for (const auto& s : samples) {
        out += json(s).dump();
        out += '\n';
    }
    write_file_atomic(path, out);
}

ExternalFormat external_format_from_string(std::string_view name) {
    if (name == "mmedbench") return ExternalFormat::MMedBench;
    if (name == "cflue") return ExternalFormat::Cflue;
    throw ConfigError("unknown external dataset format '" + std::string(name) + "'");
}

namespace {

// "A. foo\nB. bar" or "A：foo B：bar" style option blobs.
std::vector<AnswerOption> options_from_text(const std::string& blob) {
    std::vector<AnswerOption> options;
    std::size_t i = 0;
    auto is_key_start = [&](std::size_t pos) {
        if (pos + 1 >= blob.size()) return false;
        const char c = blob[pos];
        if (c < 'A' || c > 'H') return false;
        if (pos > 0 && !std::isspace(static_cast<unsigned char>(blob[pos - 1]))) return false;
        const char sep = blob[pos + 1];
        return sep == '.' || sep == ':' || sep == ')' || sep == '\xEF' || sep == '\xE3';
    };
    while (i < blob.size()) {
        if (!is_key_start(i)) {
            ++i;
            continue;
        }
        const std::string key(1, blob[i]);
        std::size_t start = i + 1;
        // Skip the separator, which may be a multi-byte full-width character.
        const auto lead = static_cast<unsigned char>(blob[start]);
        start += lead >= 0xE0 ? 3 : 1;
        std::size_t end = start;
        while (end < blob.size() && !is_key_start(end)) ++end;
        options.push_back({key, text::trim(blob.substr(start, end - start))});
        i = end;
    }
    return options;
}

std::vector<AnswerOption> options_from_json(const json& j) {
    if (j.is_object()) {
        std::vector<AnswerOption> options;
        for (const auto& [key, value] : j.items()) options.push_back({key, value.get<std::string>()});
        return options;
    }
    if (j.is_array()) {
        std::vector<AnswerOption> options;
        for (std::size_t i = 0; i < j.size(); ++i) {
            if (j[i].is_string()) {
                options.push_back({std::string(1, static_cast<char>('A' + i)), j[i].get<std::string>()});
            } else {
                options.push_back(j[i].get<AnswerOption>());
            }
        }
        return options;
    }
    if (j.is_string()) return options_from_text(j.get<std::string>());
    return {};
}

}  // namespace

std::vector<QASample> import_external(const std::filesystem::path& path, ExternalFormat format,
                                      const std::string& domain_tag, Split split, const std::string& id_prefix) {
    std::vector<QASample> samples;
    std::unordered_set<std::string> seen;
    for_each_line(path, [&](const std::string& line, std::size_t number) {
        QASample sample;
        try {
            const json j = json::parse(line);
            sample.id = j.contains("id") ? (j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump())
                                         : id_prefix + "-" + std::to_string(number);
            sample.question = j.at("question").get<std::string>();
            if (j.contains("options")) {
                sample.options = options_from_json(j["options"]);
            } else if (j.contains("choices")) {
                sample.options = options_from_json(j["choices"]);
            }
            // MMedBench keeps the key in answer_idx and the option text in answer.
            std::string gold;
            if (format == ExternalFormat::MMedBench && j.contains("answer_idx")) {
                gold = j["answer_idx"].get<std::string>();
            } else if (j.contains("gold_answer")) {
                gold = j["gold_answer"].get<std::string>();
            } else {
                gold = j.at("answer").get<std::string>();
            }
            sample.gold_answer = text::normalize_answer(gold);
            sample.domain_tag = domain_tag;
            sample.split = split;
        } catch (const json::exception& e) {
            throw ValidationError(line_error(path, number, std::string("malformed record: ") + e.what()));
        }
        try {
            validate(sample);
        } catch (const ValidationError& e) {
            spdlog::warn("{}: skipped ({})", line_error(path, number, "record"), e.what());
            return;
        }
        if (!seen.insert(sample.id).second) {
            throw ValidationError(line_error(path, number, "duplicate id '" + sample.id + "'"));
        }
        samples.push_back(std::move(sample));
    });
    return samples;
}

}  // namespace lscl
