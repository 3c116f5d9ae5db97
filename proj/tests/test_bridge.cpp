// Copyright (C) 2026 The ddrm-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "ddrm/bridge.hpp"
#include "ddrm/sampler.hpp"

#include "doctest.h"
#include "support/helpers.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

using namespace ddrm;
using namespace ddrm::bridge;
using namespace std::chrono_literals;

namespace {

Bytes fixture(const std::string& name) {
    std::ifstream in(std::string(DDRM_FIXTURE_DIR) + "/" + name, std::ios::binary);
    REQUIRE_MESSAGE(in.good(), "missing fixture " << name);
    return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::string server(const std::string& args) {
    return std::string("exec '") + DDRM_BRIDGE_SERVER + "' " + args;
}

const std::vector<float> kPayload{0.25f, -1.5f, 3.0e-8f, 1.0e30f, 0.0f, -0.0f, 2.5f, 0.1f};

bool same_bits(const std::vector<float>& a, const std::vector<float>& b) {
    if (a.size() != b.size()) return false;
    return std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

}  // namespace

TEST_CASE("golden frames") {
    CHECK(encode_hello(Hello{8, 2, 2}) == fixture("hello.bin"));
    CHECK(encode_hello_reply(HelloReply{}) == fixture("hello_reply_ok.bin"));
    CHECK(encode_hello_reply(HelloReply{1, 1}) == fixture("hello_reply_mismatch.bin"));
    CHECK(encode_request(Request{7, 0.5, -1, kPayload}) == fixture("request.bin"));
    CHECK(encode_request(Request{999, 157.25, 42, kPayload}) == fixture("request_label.bin"));
    CHECK(encode_response(Response{0, kPayload}) == fixture("response.bin"));
    CHECK(encode_error("checkpoint missing: ünet") == fixture("error.bin"));

    const Hello h = decode_hello(fixture("hello.bin"));
    CHECK(h.n == 8);
    CHECK(h.channels == 2);
    CHECK(h.side == 2);
    CHECK(h.version == 1);
    CHECK(decode_hello_reply(fixture("hello_reply_mismatch.bin")).status == 1);
    const Request r = decode_request(fixture("request_label.bin"), 8);
    CHECK(r.step == 999);
    CHECK(r.sigma == 157.25);
    CHECK(r.class_label == 42);
    CHECK(same_bits(r.payload, kPayload));
    CHECK(same_bits(decode_response(fixture("response.bin"), 8).payload, kPayload));
    CHECK(decode_error(fixture("error.bin")) == "checkpoint missing: ünet");
}

TEST_CASE("malformed frames") {
    Bytes hello = fixture("hello.bin");
    hello[0] = 'X';
    CHECK_THROWS_AS(decode_hello(hello), ProtocolError);
    const Bytes req = fixture("request.bin");
    CHECK_THROWS_AS(decode_request(req, 9), ProtocolError);
    CHECK_THROWS_AS(decode_request(std::span(req).first(req.size() - 1), 8), ProtocolError);
    CHECK_THROWS_AS(decode_response(req, 8), ProtocolError);
    Bytes padded = fixture("response.bin");
    padded.push_back(0);
    CHECK_THROWS_AS(decode_response(padded, 8), ProtocolError);
    Bytes err = fixture("error.bin");
    err[1] = 200;
    CHECK_THROWS_AS(decode_error(err), ProtocolError);
}

TEST_CASE("float payloads round trip bit-exactly") {
    const NoiseStream rng(31);
    for (std::uint64_t k = 0; k < 1000; ++k) {
        Request req;
        req.step = static_cast<std::uint32_t>(rng.bits(NoiseDomain::prior, 0, k));
        req.sigma = rng.normal(NoiseDomain::prior, 1, k);
        req.class_label = static_cast<std::int64_t>(rng.bits(NoiseDomain::prior, 2, k));
        req.payload.resize(1 + k % 17);
        for (std::size_t i = 0; i < req.payload.size(); ++i)
            req.payload[i] = std::bit_cast<float>(
                static_cast<std::uint32_t>(rng.bits(NoiseDomain::prior, 3 + k, i)));
        const Request back = decode_request(encode_request(req), req.payload.size());
        CHECK(back.step == req.step);
        CHECK(std::bit_cast<std::uint64_t>(back.sigma) == std::bit_cast<std::uint64_t>(req.sigma));
        CHECK(back.class_label == req.class_label);
        CHECK(same_bits(back.payload, req.payload));
        const Response resp = decode_response(encode_response({0, req.payload}), req.payload.size());
        CHECK(same_bits(resp.payload, req.payload));
    }
}

TEST_CASE("echo server") {
    ddrm::testing::TempDir dir("bridge");
    {
        ExternalDenoiser d(server("echo '" + (dir / "requests.bin").string() + "'"), 8, 2, 2, 10s);
        Vector x(8);
        for (Index i = 0; i < 8; ++i) x[i] = kPayload[static_cast<std::size_t>(i)];
        const Vector out = d.predict_x0(x, 0.5, 7, std::nullopt);
        for (Index i = 0; i < 8; ++i) CHECK(out[i] == x[i]);
        d.predict_x0(x, 157.25, 999, std::int64_t{42});
    }
    Bytes expected = fixture("request.bin");
    const Bytes second = fixture("request_label.bin");
    expected.insert(expected.end(), second.begin(), second.end());
    std::ifstream in(dir / "requests.bin", std::ios::binary);
    CHECK(Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()) == expected);
}

TEST_CASE("sampling through the echo server keeps data consistency") {
    const OperatorPtr h = build_block_sr(8, 2, 3);
    const Vector x = (testing::randu(192, 2).array() * 0.8 + 0.1).matrix();
    const ProblemInstance p(h, h->apply(x), 0.0);
    DdrmParams params;
    params.timesteps = subsample(1000, 20);
    ExternalDenoiser d(server("echo"), 192, 3, 8, 10s);
    const Vector out = run(p, d, SigmaSchedule::linear_beta(), params);
    CHECK(testing::max_abs(h->apply(out) - p.y()) < 1e-5);
}

TEST_CASE("server failures surface as typed errors") {
    const Vector x = Vector::Zero(8);
    CHECK_THROWS_AS(ExternalDenoiser(server("wrong-n"), 8, 2, 2, 5s), HandshakeError);
    CHECK_THROWS_AS(ExternalDenoiser(server("bad-magic"), 8, 2, 2, 5s), ProtocolError);
    CHECK_THROWS_AS(ExternalDenoiser(server("old-version"), 8, 2, 2, 5s), HandshakeError);
    CHECK_THROWS_AS(ExternalDenoiser("exit 4", 8, 2, 2, 5s), ProcessExitedError);
    {
        ExternalDenoiser d(server("error-reply"), 8, 2, 2, 5s);
        CHECK_THROWS_WITH_AS(d.predict_x0(x, 1.0, 1, std::nullopt),
                             doctest::Contains("model exploded"), ServerError);
    }
    {
        ExternalDenoiser d(server("bad-type"), 8, 2, 2, 5s);
        CHECK_THROWS_AS(d.predict_x0(x, 1.0, 1, std::nullopt), ProtocolError);
    }
    {
        ExternalDenoiser d(server("exit-after 2"), 8, 2, 2, 5s);
        CHECK_NOTHROW(d.predict_x0(x, 1.0, 1, std::nullopt));
        CHECK_NOTHROW(d.predict_x0(x, 1.0, 2, std::nullopt));
        CHECK_THROWS_WITH_AS(d.predict_x0(x, 1.0, 3, std::nullopt),
                             doctest::Contains("exit status 3"), ProcessExitedError);
    }
    {
        ExternalDenoiser d(server("hang"), 8, 2, 2, 300ms);
        CHECK_THROWS_AS(d.predict_x0(x, 1.0, 1, std::nullopt), TimeoutError);
    }
    {
        ExternalDenoiser d(server("echo"), 8, 2, 2, 5s);
        CHECK_THROWS_AS(d.predict_x0(Vector::Zero(7), 1.0, 1, std::nullopt), ContractError);
    }
}
