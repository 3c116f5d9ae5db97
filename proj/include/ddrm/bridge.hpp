// Copyright (C) 2026 The ddrm-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "ddrm/denoiser.hpp"

#include <chrono>
#include <cstdint>
#include <span>
#include <string>
#include <sys/types.h>
#include <vector>

/*
 * Client side of the denoiser bridge: an external process (typically a
 * Python server wrapping a pretrained VP diffusion model) reached over its
 * standard input/output. All integers and floats are little-endian.
 *
 *   hello        "DDRM" u32 version u64 n u32 channels u32 side
 *   hello reply  "DDRM" u32 version u8 status          (0 = ok)
 *   request      u8 1 u32 step f64 sigma i64 label(-1 = none) f32[n] x_t
 *   response     u8 2 u8 status f32[n] x0
 *   error        u8 3 u32 length u8[length] utf-8 message
 */
namespace ddrm::bridge {

using Bytes = std::vector<std::uint8_t>;

inline constexpr std::uint32_t kProtocolVersion = 1;
inline constexpr std::uint8_t kRequestFrame = 1;
inline constexpr std::uint8_t kResponseFrame = 2;
inline constexpr std::uint8_t kErrorFrame = 3;

enum class HandshakeStatus : std::uint8_t {
    ok = 0,
    dimension_mismatch = 1,
    unsupported_version = 2,
};

struct Hello {
    std::uint64_t n = 0;
    std::uint32_t channels = 0;
    std::uint32_t side = 0;
    std::uint32_t version = kProtocolVersion;
};

struct HelloReply {
    std::uint32_t version = kProtocolVersion;
    std::uint8_t status = 0;
};

struct Request {
    std::uint32_t step = 0;
    double sigma = 0.0;
    std::int64_t class_label = -1;
    std::vector<float> payload;
};

struct Response {
    std::uint8_t status = 0;
    std::vector<float> payload;
};

class BridgeError : public Error {
public:
    explicit BridgeError(const std::string& what) : Error(what) {}
};

/// Malformed or unexpected bytes from the server.
class ProtocolError : public BridgeError {
public:
    explicit ProtocolError(const std::string& what) : BridgeError(what) {}
};

/// The server refused the hello (wrong dimensions or version).
class HandshakeError : public ProtocolError {
public:
    explicit HandshakeError(const std::string& what) : ProtocolError(what) {}
};

/// The server answered a request with an error frame.
class ServerError : public BridgeError {
public:
    explicit ServerError(const std::string& what) : BridgeError(what) {}
};

class ProcessExitedError : public BridgeError {
public:
    explicit ProcessExitedError(const std::string& what) : BridgeError(what) {}
};

class TimeoutError : public BridgeError {
public:
    explicit TimeoutError(const std::string& what) : BridgeError(what) {}
};

Bytes encode_hello(const Hello& hello);
Bytes encode_hello_reply(const HelloReply& reply);
Bytes encode_request(const Request& request);
Bytes encode_response(const Response& response);
Bytes encode_error(const std::string& message);

Hello decode_hello(std::span<const std::uint8_t> bytes);
HelloReply decode_hello_reply(std::span<const std::uint8_t> bytes);
/// `n` is the payload length agreed in the handshake.
Request decode_request(std::span<const std::uint8_t> bytes, std::uint64_t n);
Response decode_response(std::span<const std::uint8_t> bytes, std::uint64_t n);
std::string decode_error(std::span<const std::uint8_t> bytes);

/// Child process running `/bin/sh -c command` with stdin/stdout on a socket.
class Subprocess {
public:
    explicit Subprocess(const std::string& command);
    ~Subprocess();

    Subprocess(const Subprocess&) = delete;
    Subprocess& operator=(const Subprocess&) = delete;

    void write_all(std::span<const std::uint8_t> bytes);
    void read_exact(std::span<std::uint8_t> out, std::chrono::milliseconds timeout);

    /// Signals end of input to the child.
    void close_input();

    pid_t pid() const { return pid_; }

private:
    std::string describe_exit();

    int fd_ = -1;
    pid_t pid_ = -1;
};

}  // namespace ddrm::bridge

namespace ddrm {

/// x̂₀ predictions served by an external process speaking the bridge protocol.
class ExternalDenoiser final : public Denoiser {
public:
    ExternalDenoiser(const std::string& command, Index n, std::uint32_t channels,
                     std::uint32_t side,
                     std::chrono::milliseconds timeout = std::chrono::seconds(120));

    Vector predict_x0(const Vector& x_t, double sigma_t, int step,
                      std::optional<std::int64_t> class_label) override;

private:
    bridge::Subprocess process_;
    Index n_;
    std::chrono::milliseconds timeout_;
};

}  // namespace ddrm
