// Copyright (c) urv contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Feed-forward ReLU networks: evaluation, input/output normalization, and the
// two text formats (NNet and urvnet v1).

#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "urv/error.hpp"
#include "urv/geometry.hpp"

namespace urv {

enum class Activation { ReLU, Identity };

struct Layer {
    Matrix weights;  // n_out x n_in
    Vector bias;     // n_out
    Activation activation = Activation::ReLU;

    Index input_dim() const { return weights.cols(); }
    Index output_dim() const { return weights.rows(); }
};

/// Normalization statistics as shipped with NNet files.
struct Normalization {
    Vector input_min;
    Vector input_max;
    Vector input_mean;
    Vector input_range;
    Vector output_mean;
    Vector output_range;
};

class Network {
public:
    /// Validates shapes; hidden layers must be ReLU and the last layer Identity.
    explicit Network(std::vector<Layer> layers, std::optional<Normalization> norm = std::nullopt)
        : layers_(std::move(layers)), norm_(std::move(norm)) {
        if (layers_.empty()) throw ConfigError("network needs at least one layer");
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            const Layer& layer = layers_[l];
            if (layer.weights.rows() < 1 || layer.weights.cols() < 1) {
                throw ConfigError("layer " + std::to_string(l) + " has an empty weight matrix");
            }
            if (layer.bias.size() != layer.weights.rows()) {
                throw ConfigError("layer " + std::to_string(l) + ": bias length does not match weight rows");
            }
            if (!layer.weights.allFinite() || !layer.bias.allFinite()) {
                throw ConfigError("layer " + std::to_string(l) + " has non-finite parameters");
            }
            if (l > 0 && layer.weights.cols() != layers_[l - 1].weights.rows()) {
                throw ConfigError("layer " + std::to_string(l) + " input does not chain with previous output");
            }
            const bool last = l + 1 == layers_.size();
            if (last && layer.activation != Activation::Identity) {
                throw ConfigError("final layer must be affine (identity activation)");
            }
            if (!last && layer.activation != Activation::ReLU) {
                throw ConfigError("hidden layers must use ReLU");
            }
        }
        if (norm_) validate_normalization(*norm_);
    }

    const std::vector<Layer>& layers() const noexcept { return layers_; }
    Index input_dim() const { return layers_.front().input_dim(); }
    Index output_dim() const { return layers_.back().output_dim(); }
    const std::optional<Normalization>& normalization() const noexcept { return norm_; }

    friend bool operator==(const Network& a, const Network& b) {
        if (a.layers_.size() != b.layers_.size()) return false;
        for (std::size_t l = 0; l < a.layers_.size(); ++l) {
            const Layer& x = a.layers_[l];
            const Layer& y = b.layers_[l];
            if (x.activation != y.activation || x.weights.rows() != y.weights.rows() ||
                x.weights.cols() != y.weights.cols() || x.weights != y.weights || x.bias != y.bias) {
                return false;
            }
        }
        if (a.norm_.has_value() != b.norm_.has_value()) return false;
        if (!a.norm_) return true;
        const Normalization& p = *a.norm_;
        const Normalization& q = *b.norm_;
        return p.input_min == q.input_min && p.input_max == q.input_max && p.input_mean == q.input_mean &&
               p.input_range == q.input_range && p.output_mean == q.output_mean &&
               p.output_range == q.output_range;
    }

private:
    void validate_normalization(const Normalization& n) const {
        const Index in = input_dim();
        const Index out = output_dim();
        if (n.input_min.size() != in || n.input_max.size() != in || n.input_mean.size() != in ||
            n.input_range.size() != in) {
            throw ConfigError("input normalization statistics do not match input dimension");
        }
        if (n.output_mean.size() != out || n.output_range.size() != out) {
            throw ConfigError("output normalization statistics do not match output dimension");
        }
        for (Index i = 0; i < in; ++i) {
            if (!(n.input_range(i) > 0.0)) throw ConfigError("input range must be positive");
            if (n.input_min(i) > n.input_max(i)) throw ConfigError("input min exceeds max");
        }
        for (Index i = 0; i < out; ++i) {
            if (!(n.output_range(i) > 0.0)) throw ConfigError("output range must be positive");
        }
    }

    std::vector<Layer> layers_;
    std::optional<Normalization> norm_;
};

/// Forward propagation on a normalized input.
inline Vector evaluate(const Network& net, const Vector& x) {
    if (x.size() != net.input_dim()) throw ConfigError("input dimension does not match network");
    Vector h = x;
    for (const Layer& layer : net.layers()) {
        h = layer.weights * h + layer.bias;
        if (layer.activation == Activation::ReLU) h = h.cwiseMax(0.0);
    }
    return h;
}

struct NormalizedInput {
    Vector values;
    std::vector<bool> clamped;  // per coordinate: raw value was outside [min, max]

    bool any_clamped() const {
        for (bool c : clamped) {
            if (c) return true;
        }
        return false;
    }
};

/// (clamp(raw, min, max) - mean) / range, per input coordinate.
inline NormalizedInput normalize(const Network& net, const Vector& raw) {
    if (!net.normalization()) throw ConfigError("network carries no normalization statistics");
    const Normalization& n = *net.normalization();
    if (raw.size() != net.input_dim()) throw ConfigError("input dimension does not match network");
    NormalizedInput out{Vector(raw.size()), std::vector<bool>(static_cast<std::size_t>(raw.size()), false)};
    for (Index i = 0; i < raw.size(); ++i) {
        const double c = std::clamp(raw(i), n.input_min(i), n.input_max(i));
        out.clamped[static_cast<std::size_t>(i)] = c != raw(i);
        out.values(i) = (c - n.input_mean(i)) / n.input_range(i);
    }
    return out;
}

inline Vector denormalize(const Network& net, const Vector& normalized) {
    if (!net.normalization()) throw ConfigError("network carries no normalization statistics");
    const Normalization& n = *net.normalization();
    if (normalized.size() != net.input_dim()) throw ConfigError("input dimension does not match network");
    return normalized.cwiseProduct(n.input_range) + n.input_mean;
}

/// Network output in raw units (identity without statistics).
inline Vector denormalize_output(const Network& net, const Vector& y) {
    if (y.size() != net.output_dim()) throw ConfigError("output dimension does not match network");
    if (!net.normalization()) return y;
    const Normalization& n = *net.normalization();
    return y.cwiseProduct(n.output_range) + n.output_mean;
}

// ---------------------------------------------------------------------------
// Text formats

namespace detail {

struct TextLine {
    std::size_t number;  // 1-based
    std::string_view text;
};

inline std::vector<TextLine> split_lines(std::string_view text) {
    std::vector<TextLine> lines;
    std::size_t start = 0;
    std::size_t number = 1;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back({number++, line});
        if (end == text.size()) break;
        start = end + 1;
    }
    // A final newline does not open another line.
    if (!lines.empty() && lines.back().text.empty() && !text.empty() && text.back() == '\n') lines.pop_back();
    return lines;
}

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t");
    return s.substr(first, last - first + 1);
}

inline double parse_double(std::string_view token, std::size_t line) {
    token = trim(token);
    if (!token.empty() && token.front() == '+') token.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size() || token.empty()) {
        throw ParseError(line, "invalid number '" + std::string(token) + "'");
    }
    if (!std::isfinite(value)) throw ParseError(line, "non-finite number '" + std::string(token) + "'");
    return value;
}

inline long parse_count(std::string_view token, std::size_t line) {
    token = trim(token);
    long value = 0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size() || token.empty() || value < 0) {
        throw ParseError(line, "invalid count '" + std::string(token) + "'");
    }
    return value;
}

/// Comma-separated fields; a trailing empty field (trailing comma) is dropped.
inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        fields.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                                   : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    if (!fields.empty() && fields.back().empty()) fields.pop_back();
    return fields;
}

/// Fields separated by exactly one space, no leading or trailing blanks.
inline std::vector<std::string_view> split_single_spaces(const TextLine& line) {
    std::vector<std::string_view> fields;
    std::string_view s = line.text;
    if (s.empty()) return fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t sp = s.find(' ', start);
        std::string_view field = s.substr(start, sp == std::string_view::npos ? std::string_view::npos : sp - start);
        if (field.empty()) throw ParseError(line.number, "fields must be separated by single spaces");
        if (field.find('\t') != std::string_view::npos) throw ParseError(line.number, "tab characters are not allowed");
        fields.push_back(field);
        if (sp == std::string_view::npos) break;
        start = sp + 1;
    }
    return fields;
}

inline Vector parse_vector(const std::vector<std::string_view>& fields, std::size_t first, std::size_t expected,
                           std::size_t line) {
    if (fields.size() - first != expected) {
        throw ParseError(line, "expected " + std::to_string(expected) + " values, found " +
                                   std::to_string(fields.size() - first));
    }
    Vector v(static_cast<Index>(expected));
    for (std::size_t i = 0; i < expected; ++i) v(static_cast<Index>(i)) = parse_double(fields[first + i], line);
    return v;
}

inline std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

inline std::vector<Layer> finish_layers(std::vector<Layer> layers) {
    for (std::size_t l = 0; l < layers.size(); ++l) {
        layers[l].activation = l + 1 == layers.size() ? Activation::Identity : Activation::ReLU;
    }
    return layers;
}

}  // namespace detail

/// Reads the NNet text format. The maxLayerSize and symmetry fields are read and ignored.
inline Network parse_nnet(std::string_view text) {
    using namespace detail;
    std::vector<TextLine> all = split_lines(text);
    std::vector<TextLine> lines;
    bool in_header = true;
    for (const auto& l : all) {
        const std::string_view t = trim(l.text);
        if (in_header && t.starts_with("//")) continue;
        in_header = false;
        if (t.empty()) continue;
        lines.push_back(l);
    }
    std::size_t cursor = 0;
    const std::size_t last_line = all.empty() ? 1 : all.back().number;
    auto next = [&](const char* what) -> const TextLine& {
        if (cursor >= lines.size()) throw ParseError(last_line, std::string("unexpected end of file, expected ") + what);
        return lines[cursor++];
    };

    const TextLine& header = next("header");
    const auto hf = split_commas(header.text);
    if (hf.size() < 4) throw ParseError(header.number, "header needs numLayers,inputSize,outputSize,maxLayerSize");
    const long num_layers = parse_count(hf[0], header.number);
    const long input_size = parse_count(hf[1], header.number);
    const long output_size = parse_count(hf[2], header.number);
    (void)parse_count(hf[3], header.number);
    if (num_layers < 1 || input_size < 1 || output_size < 1) throw ParseError(header.number, "sizes must be positive");

    const TextLine& sizes_line = next("layer sizes");
    const auto sf = split_commas(sizes_line.text);
    if (sf.size() != static_cast<std::size_t>(num_layers + 1)) {
        throw ParseError(sizes_line.number, "expected " + std::to_string(num_layers + 1) + " layer sizes");
    }
    std::vector<long> sizes;
    for (auto f : sf) {
        sizes.push_back(parse_count(f, sizes_line.number));
        if (sizes.back() < 1) throw ParseError(sizes_line.number, "layer sizes must be positive");
    }
    if (sizes.front() != input_size || sizes.back() != output_size) {
        throw ParseError(sizes_line.number, "layer sizes disagree with header input/output sizes");
    }

    {
        // Unused by the format's readers, but must still be an integer flag.
        const TextLine& flag = next("symmetry flag");
        const auto ff = split_commas(flag.text);
        if (ff.size() != 1) throw ParseError(flag.number, "symmetry flag line must hold one integer");
        (void)parse_count(ff[0], flag.number);
    }

    const auto in = static_cast<std::size_t>(input_size);
    auto stats = [&](const char* what, std::size_t count) {
        const TextLine& l = next(what);
        return parse_vector(split_commas(l.text), 0, count, l.number);
    };
    Normalization norm;
    norm.input_min = stats("input minimums", in);
    norm.input_max = stats("input maximums", in);
    const Vector means = stats("means", in + 1);
    const Vector ranges = stats("ranges", in + 1);
    norm.input_mean = means.head(input_size);
    norm.input_range = ranges.head(input_size);
    norm.output_mean = Vector::Constant(output_size, means(input_size));
    norm.output_range = Vector::Constant(output_size, ranges(input_size));

    std::vector<Layer> layers;
    for (long l = 0; l < num_layers; ++l) {
        const Index rows = sizes[static_cast<std::size_t>(l + 1)];
        const Index cols = sizes[static_cast<std::size_t>(l)];
        Layer layer{Matrix(rows, cols), Vector(rows), Activation::ReLU};
        for (Index r = 0; r < rows; ++r) {
            const TextLine& wl = next("weight row");
            layer.weights.row(r) = parse_vector(split_commas(wl.text), 0, static_cast<std::size_t>(cols), wl.number);
        }
        for (Index r = 0; r < rows; ++r) {
            const TextLine& bl = next("bias");
            layer.bias(r) = parse_vector(split_commas(bl.text), 0, 1, bl.number)(0);
        }
        layers.push_back(std::move(layer));
    }
    if (cursor != lines.size()) throw ParseError(lines[cursor].number, "trailing content after last layer");

    try {
        return Network(finish_layers(std::move(layers)), std::move(norm));
    } catch (const ConfigError& e) {
        throw ParseError(header.number, e.what());
    }
}

/// Reads the urvnet v1 format (see docs/formats.md).
inline Network parse_urvnet(std::string_view text) {
    using namespace detail;
    const std::vector<TextLine> lines = split_lines(text);
    std::size_t cursor = 0;
    const std::size_t last_line = lines.empty() ? 1 : lines.back().number;
    auto next = [&](const char* what) -> const TextLine& {
        if (cursor >= lines.size()) throw ParseError(last_line, std::string("unexpected end of file, expected ") + what);
        return lines[cursor++];
    };
    auto expect_keyword = [&](const char* keyword) {
        const TextLine& l = next(keyword);
        if (l.text != keyword) throw ParseError(l.number, std::string("expected '") + keyword + "'");
    };

    const TextLine& magic = next("'urvnet 1'");
    if (magic.text != "urvnet 1") throw ParseError(magic.number, "expected 'urvnet 1'");

    const TextLine& dims_line = next("dims");
    const auto df = split_single_spaces(dims_line);
    if (df.size() < 3 || df[0] != "dims") throw ParseError(dims_line.number, "expected 'dims d0 d1 ...' with at least two sizes");
    std::vector<Index> dims;
    for (std::size_t i = 1; i < df.size(); ++i) {
        const long v = parse_count(df[i], dims_line.number);
        if (v < 1) throw ParseError(dims_line.number, "dimensions must be positive");
        dims.push_back(v);
    }

    std::vector<Layer> layers;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const Index rows = dims[l + 1];
        const Index cols = dims[l];
        Layer layer{Matrix(rows, cols), Vector(rows), Activation::ReLU};
        expect_keyword("W");
        for (Index r = 0; r < rows; ++r) {
            const TextLine& wl = next("weight row");
            layer.weights.row(r) = parse_vector(split_single_spaces(wl), 0, static_cast<std::size_t>(cols), wl.number);
        }
        expect_keyword("b");
        const TextLine& bl = next("bias row");
        layer.bias = parse_vector(split_single_spaces(bl), 0, static_cast<std::size_t>(rows), bl.number);
        layers.push_back(std::move(layer));
    }

    std::optional<Normalization> norm;
    if (cursor < lines.size()) {
        expect_keyword("norm");
        auto stat = [&](const char* key, Index count) {
            const TextLine& l = next(key);
            const auto f = split_single_spaces(l);
            if (f.empty() || f[0] != key) throw ParseError(l.number, std::string("expected '") + key + "'");
            return parse_vector(f, 1, static_cast<std::size_t>(count), l.number);
        };
        Normalization n;
        n.input_min = stat("in_min", dims.front());
        n.input_max = stat("in_max", dims.front());
        n.input_mean = stat("in_mean", dims.front());
        n.input_range = stat("in_range", dims.front());
        n.output_mean = stat("out_mean", dims.back());
        n.output_range = stat("out_range", dims.back());
        norm = std::move(n);
    }
    if (cursor != lines.size()) throw ParseError(lines[cursor].number, "trailing content");

    try {
        return Network(finish_layers(std::move(layers)), std::move(norm));
    } catch (const ConfigError& e) {
        throw ParseError(magic.number, e.what());
    }
}

/// Dispatches on the first line: "urvnet 1" selects urvnet, anything else NNet.
inline Network parse_network(std::string_view text) {
    const auto lines = detail::split_lines(text);
    if (!lines.empty() && lines.front().text.starts_with("urvnet")) return parse_urvnet(text);
    return parse_nnet(text);
}

/// Canonical urvnet v1 text; numbers use the shortest round-trip representation.
inline std::string serialize_urvnet(const Network& net) {
    using detail::format_double;
    std::string out = "urvnet 1\ndims " + std::to_string(net.input_dim());
    for (const Layer& layer : net.layers()) out += " " + std::to_string(layer.output_dim());
    out += "\n";
    auto row = [&](const auto& values) {
        for (Index i = 0; i < values.size(); ++i) {
            if (i) out += ' ';
            out += format_double(values(i));
        }
        out += '\n';
    };
    for (const Layer& layer : net.layers()) {
        out += "W\n";
        for (Index r = 0; r < layer.weights.rows(); ++r) row(layer.weights.row(r));
        out += "b\n";
        row(layer.bias);
    }
    if (const auto& n = net.normalization()) {
        out += "norm\n";
        auto stat = [&](const char* key, const Vector& v) {
            out += key;
            out += ' ';
            row(v);
        };
        stat("in_min", n->input_min);
        stat("in_max", n->input_max);
        stat("in_mean", n->input_mean);
        stat("in_range", n->input_range);
        stat("out_mean", n->output_mean);
        stat("out_range", n->output_range);
    }
    return out;
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline Network load_network(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    try {
        return parse_network(text);
    } catch (const ParseError& e) {
        throw e.with_source(path.string());
    }
}

}  // namespace urv
