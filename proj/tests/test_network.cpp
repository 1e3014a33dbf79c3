// Copyright (c) urv contributors.
// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <string>

#include "support.hpp"

using namespace urv;
using urv::testkit::mat;
using urv::testkit::vec;

namespace {

const std::string kData = URV_TEST_DATA;

/// Straight-line interpreter written independently of evaluate().
std::vector<double> naive_forward(const Network& net, std::vector<double> x) {
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
        const Layer& layer = net.layers()[l];
        std::vector<double> next(static_cast<std::size_t>(layer.weights.rows()));
        for (Index r = 0; r < layer.weights.rows(); ++r) {
            double acc = layer.bias(r);
            for (Index c = 0; c < layer.weights.cols(); ++c) acc += layer.weights(r, c) * x[static_cast<std::size_t>(c)];
            next[static_cast<std::size_t>(r)] = (l + 1 < net.layers().size() && acc < 0) ? 0.0 : acc;
        }
        x = std::move(next);
    }
    return x;
}

std::string expect_parse_error(const std::string& text, std::size_t line) {
    try {
        parse_network(text);
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), line) << e.what();
        return e.what();
    }
    ADD_FAILURE() << "no ParseError";
    return {};
}

}  // namespace

TEST(Network, ValidatesStructure) {
    EXPECT_THROW(Network(std::vector<Layer>{}), ConfigError);
    // bias length mismatch
    EXPECT_THROW(Network({Layer{mat({{1, 2}}), vec({0, 0}), Activation::Identity}}), ConfigError);
    // chaining mismatch
    EXPECT_THROW(Network({Layer{mat({{1, 2}}), vec({0}), Activation::ReLU},
                          Layer{mat({{1, 1}}), vec({0}), Activation::Identity}}),
                 ConfigError);
    // final layer must be affine
    EXPECT_THROW(Network({Layer{mat({{1}}), vec({0}), Activation::ReLU}}), ConfigError);
    // hidden layers must be ReLU
    EXPECT_THROW(Network({Layer{mat({{1}}), vec({0}), Activation::Identity},
                          Layer{mat({{1}}), vec({0}), Activation::Identity}}),
                 ConfigError);
    EXPECT_THROW(Network({Layer{mat({{NAN}}), vec({0}), Activation::Identity}}), ConfigError);
}

TEST(Evaluate, IdentityLayer) {
    const Network net({Layer{Matrix::Identity(3, 3), Vector::Zero(3), Activation::Identity}});
    EXPECT_EQ(evaluate(net, vec({1, -2, 3})), vec({1, -2, 3}));
    EXPECT_THROW(evaluate(net, vec({1, 2})), ConfigError);
}

TEST(Evaluate, AbsoluteValueNet) {
    const Network net({Layer{mat({{1}, {-1}}), vec({0, 0}), Activation::ReLU},
                       Layer{mat({{1, 1}}), vec({0}), Activation::Identity}});
    EXPECT_EQ(evaluate(net, vec({-3})), vec({3}));
    EXPECT_EQ(evaluate(net, vec({2.5})), vec({2.5}));
}

TEST(Evaluate, MatchesNaiveInterpreter) {
    Rng rng(1);
    const Network net = testkit::random_tiny_net(rng, 3, {5, 4}, 2);
    for (int i = 0; i < 1000; ++i) {
        const Vector x = testkit::random_points(rng, 1, 3, 2.0).row(0).transpose();
        const auto expect = naive_forward(net, {x(0), x(1), x(2)});
        const Vector y = evaluate(net, x);
        for (Index k = 0; k < 2; ++k) EXPECT_NEAR(y(k), expect[static_cast<std::size_t>(k)], 1e-12);
    }
}

TEST(Normalize, MeanMapsToZeroAndMaxToScaledBound) {
    const Network net = load_network(kData + "/normalized.urvnet");
    const auto& n = *net.normalization();
    EXPECT_EQ(normalize(net, n.input_mean).values, Vector::Zero(2));
    const auto at_max = normalize(net, n.input_max);
    EXPECT_EQ(at_max.values, vec({(1.0 - 0.0) / 2.0, (2.0 - 0.5) / 4.0}));
    EXPECT_FALSE(at_max.any_clamped());
    const auto clamped = normalize(net, vec({5, 0}));
    EXPECT_TRUE(clamped.clamped[0]);
    EXPECT_FALSE(clamped.clamped[1]);
    EXPECT_EQ(clamped.values(0), 0.5);
}

TEST(Normalize, RoundTripInRange) {
    const Network net = load_network(kData + "/normalized.urvnet");
    Rng rng(2);
    for (int i = 0; i < 100; ++i) {
        const Vector x = vec({rng.uniform(-1, 1), rng.uniform(-2, 2)});
        const Vector back = denormalize(net, normalize(net, x).values);
        EXPECT_NEAR((back - x).cwiseAbs().maxCoeff(), 0.0, 1e-12);
    }
}

TEST(Normalize, MissingStatistics) {
    const Network net({Layer{mat({{1}}), vec({0}), Activation::Identity}});
    EXPECT_THROW(normalize(net, vec({1})), ConfigError);
    EXPECT_EQ(denormalize_output(net, vec({4})), vec({4}));
}

TEST(NNet, GoldenFile) {
    const Network net = load_network(kData + "/golden_2_2_1.nnet");
    ASSERT_EQ(net.layers().size(), 2u);
    EXPECT_EQ(net.layers()[0].weights, mat({{1, 2}, {-1, 0.25}}));
    EXPECT_EQ(net.layers()[0].bias, vec({0.5, -1}));
    EXPECT_EQ(net.layers()[0].activation, Activation::ReLU);
    EXPECT_EQ(net.layers()[1].weights, mat({{3, -1}}));
    EXPECT_EQ(net.layers()[1].bias, vec({0.125}));
    EXPECT_EQ(net.layers()[1].activation, Activation::Identity);
    const auto& n = *net.normalization();
    EXPECT_EQ(n.input_min, vec({-1, -2}));
    EXPECT_EQ(n.input_max, vec({1, 2}));
    EXPECT_EQ(n.input_mean, vec({0, 0.5}));
    EXPECT_EQ(n.input_range, vec({2, 4}));
    EXPECT_EQ(n.output_mean, vec({10}));
    EXPECT_EQ(n.output_range, vec({5}));
    // h0 = relu(1 + 2*1 + 0.5) = 3.5, h1 = relu(-1 + 0.25 - 1) = 0 -> 10.625
    EXPECT_EQ(evaluate(net, vec({1, 1})), vec({10.625}));
}

TEST(NNet, RaggedRowNamesLine) {
    try {
        load_network(kData + "/ragged.nnet");
        FAIL() << "no ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 10u);
        EXPECT_NE(std::string(e.what()).find("ragged.nnet"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("line 10"), std::string::npos);
    }
}

TEST(NNet, MalformedHeaders) {
    expect_parse_error("", 1);
    expect_parse_error("2,2,1\n", 1);
    expect_parse_error("1,2,1,2,\n2,3,\n", 2);
    expect_parse_error("1,2,1,2,\n2,x,\n", 2);
    expect_parse_error("1,2,1,2,\n2,1,\n0,\n-1,-1,\n1,1,\n0,0,0,\n1,1,1,\n1,inf,\n0,\n", 8);
}

TEST(NNet, TrailingContent) {
    const std::string text = "1,1,1,1,\n1,1,\n0,\n0,\n1,\n0,0,\n1,1,\n2,\n0,\n7,\n";
    expect_parse_error(text, 10);
}

TEST(Urvnet, RoundTrip) {
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const Network net = testkit::random_tiny_net(rng, 3, {4, 2}, 2);
        const std::string text = serialize_urvnet(net);
        const Network back = parse_network(text);
        EXPECT_TRUE(back == net);
        EXPECT_EQ(serialize_urvnet(back), text);
    }
    const Network normed = load_network(kData + "/normalized.urvnet");
    EXPECT_TRUE(parse_network(serialize_urvnet(normed)) == normed);
    const Network nnet = load_network(kData + "/golden_2_2_1.nnet");
    EXPECT_TRUE(parse_network(serialize_urvnet(nnet)) == nnet);
}

TEST(Urvnet, StrictGrammar) {
    expect_parse_error("urvnet 2\n", 1);
    expect_parse_error("urvnet 1\ndims 1\n", 2);
    expect_parse_error("urvnet 1\ndims 1 1\nW\n1  \nb\n0\n", 4);      // trailing spaces
    expect_parse_error("urvnet 1\ndims 1 1\nW\n1\n0\n", 5);           // missing 'b'
    expect_parse_error("urvnet 1\ndims 2 1\nW\n1\nb\n0\n", 4);        // short row
    expect_parse_error("urvnet 1\ndims 1 1\nW\n1\nb\n0\nextra\n", 7);  // junk after layers
    expect_parse_error("urvnet 1\ndims 1 1\nW\n1\nb\n", 5);           // truncated
}

TEST(Urvnet, NonFiniteRejected) {
    EXPECT_THROW(load_network(kData + "/nonfinite.urvnet"), ParseError);
}

TEST(LoadNetwork, MissingFileNamesPath) {
    try {
        load_network("/nonexistent/dir/net.nnet");
        FAIL() << "no error";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("/nonexistent/dir/net.nnet"), std::string::npos);
    }
}

TEST(NNet, CorruptedCorpusIsRejected) {
    const std::string golden = read_text_file(kData + "/golden_2_2_1.nnet");
    std::vector<std::string> lines;
    for (std::size_t start = 0; start < golden.size();) {
        const std::size_t end = golden.find('\n', start);
        lines.push_back(golden.substr(start, end - start));
        start = end + 1;
    }
    auto join = [](const std::vector<std::string>& ls) {
        std::string out;
        for (const auto& l : ls) out += l + "\n";
        return out;
    };
    ASSERT_NO_THROW(parse_network(join(lines)));
    std::size_t mutations = 0;
    for (std::size_t i = 3; i < lines.size(); ++i) {  // first three lines are comments
        auto dropped = lines;
        dropped.erase(dropped.begin() + static_cast<std::ptrdiff_t>(i));
        EXPECT_THROW(parse_network(join(dropped)), ParseError) << "dropped line " << i + 1;

        auto doubled = lines;
        doubled.insert(doubled.begin() + static_cast<std::ptrdiff_t>(i), lines[i]);
        EXPECT_THROW(parse_network(join(doubled)), ParseError) << "doubled line " << i + 1;

        auto garbled = lines;
        garbled[i] = "abc," + garbled[i];
        EXPECT_THROW(parse_network(join(garbled)), ParseError) << "garbled line " << i + 1;

        auto truncated = std::vector<std::string>(lines.begin(), lines.begin() + static_cast<std::ptrdiff_t>(i));
        EXPECT_THROW(parse_network(join(truncated)), ParseError) << "truncated at line " << i + 1;
        mutations += 4;
    }
    EXPECT_GE(mutations, 40u);
}
