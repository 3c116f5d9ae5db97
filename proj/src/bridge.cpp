// Copyright (C) 2026 The ddrm-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "ddrm/bridge.hpp"

#include <bit>
#include <cerrno>
#include <cstring>
#include <thread>

#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

extern char** environ;

namespace ddrm::bridge {

namespace {

constexpr std::uint8_t kMagic[4] = {'D', 'D', 'R', 'M'};

class Writer {
public:
    explicit Writer(std::size_t reserve) { bytes_.reserve(reserve); }

    void u8(std::uint8_t v) { bytes_.push_back(v); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void raw(std::span<const std::uint8_t> b) { bytes_.insert(bytes_.end(), b.begin(), b.end()); }

    Bytes take() { return std::move(bytes_); }

private:
    Bytes bytes_;
};

class Reader {
public:
    Reader(std::span<const std::uint8_t> bytes, const char* what) : bytes_(bytes), what_(what) {}

    std::uint8_t u8() { return take(1)[0]; }
    std::uint32_t u32() {
        const auto b = take(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[static_cast<std::size_t>(i)]) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        const auto b = take(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[static_cast<std::size_t>(i)]) << (8 * i);
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::span<const std::uint8_t> take(std::size_t n) {
        if (pos_ + n > bytes_.size())
            throw ProtocolError(std::string(what_) + ": frame truncated");
        auto out = bytes_.subspan(pos_, n);
        pos_ += n;
        return out;
    }
    void magic() {
        const auto b = take(4);
        if (std::memcmp(b.data(), kMagic, 4) != 0)
            throw ProtocolError(std::string(what_) + ": bad magic");
    }
    void finish() const {
        if (pos_ != bytes_.size())
            throw ProtocolError(std::string(what_) + ": trailing bytes after frame");
    }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
    const char* what_;
};

}  // namespace

Bytes encode_hello(const Hello& hello) {
    Writer w(24);
    w.raw(kMagic);
    w.u32(hello.version);
    w.u64(hello.n);
    w.u32(hello.channels);
    w.u32(hello.side);
    return w.take();
}

Bytes encode_hello_reply(const HelloReply& reply) {
    Writer w(9);
    w.raw(kMagic);
    w.u32(reply.version);
    w.u8(reply.status);
    return w.take();
}

Bytes encode_request(const Request& request) {
    Writer w(21 + 4 * request.payload.size());
    w.u8(kRequestFrame);
    w.u32(request.step);
    w.f64(request.sigma);
    w.u64(static_cast<std::uint64_t>(request.class_label));
    for (float v : request.payload) w.f32(v);
    return w.take();
}

Bytes encode_response(const Response& response) {
    Writer w(2 + 4 * response.payload.size());
    w.u8(kResponseFrame);
    w.u8(response.status);
    for (float v : response.payload) w.f32(v);
    return w.take();
}

Bytes encode_error(const std::string& message) {
    Writer w(5 + message.size());
    w.u8(kErrorFrame);
    w.u32(static_cast<std::uint32_t>(message.size()));
    w.raw({reinterpret_cast<const std::uint8_t*>(message.data()), message.size()});
    return w.take();
}

Hello decode_hello(std::span<const std::uint8_t> bytes) {
    Reader r(bytes, "hello");
    r.magic();
    Hello h;
    h.version = r.u32();
    h.n = r.u64();
    h.channels = r.u32();
    h.side = r.u32();
    r.finish();
    return h;
}

HelloReply decode_hello_reply(std::span<const std::uint8_t> bytes) {
    Reader r(bytes, "hello reply");
    r.magic();
    HelloReply h;
    h.version = r.u32();
    h.status = r.u8();
    r.finish();
    return h;
}

Request decode_request(std::span<const std::uint8_t> bytes, std::uint64_t n) {
    Reader r(bytes, "request");
    if (r.u8() != kRequestFrame) throw ProtocolError("request: wrong frame type");
    Request req;
    req.step = r.u32();
    req.sigma = r.f64();
    req.class_label = static_cast<std::int64_t>(r.u64());
    req.payload.resize(n);
    for (auto& v : req.payload) v = r.f32();
    r.finish();
    return req;
}

Response decode_response(std::span<const std::uint8_t> bytes, std::uint64_t n) {
    Reader r(bytes, "response");
    if (r.u8() != kResponseFrame) throw ProtocolError("response: wrong frame type");
    Response resp;
    resp.status = r.u8();
    resp.payload.resize(n);
    for (auto& v : resp.payload) v = r.f32();
    r.finish();
    return resp;
}

std::string decode_error(std::span<const std::uint8_t> bytes) {
    Reader r(bytes, "error");
    if (r.u8() != kErrorFrame) throw ProtocolError("error: wrong frame type");
    const std::uint32_t len = r.u32();
    const auto text = r.take(len);
    r.finish();
    return std::string(text.begin(), text.end());
}

Subprocess::Subprocess(const std::string& command) {
    int fds[2];
    if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, fds) != 0)
        throw BridgeError(std::string("socketpair failed: ") + std::strerror(errno));

    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    // dup2 clears FD_CLOEXEC on the targets, so only stdin/stdout survive exec.
    posix_spawn_file_actions_adddup2(&actions, fds[1], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, fds[1], STDOUT_FILENO);

    const char* argv[] = {"/bin/sh", "-c", command.c_str(), nullptr};
    const int rc = ::posix_spawn(&pid_, "/bin/sh", &actions, nullptr, const_cast<char**>(argv),
                                 environ);
    posix_spawn_file_actions_destroy(&actions);
    ::close(fds[1]);
    if (rc != 0) {
        ::close(fds[0]);
        throw BridgeError(std::string("cannot start bridge process: ") + std::strerror(rc));
    }
    fd_ = fds[0];
}

Subprocess::~Subprocess() {
    if (fd_ >= 0) {
        ::shutdown(fd_, SHUT_WR);
        ::close(fd_);
    }
    if (pid_ > 0) {
        int status = 0;
        for (int i = 0; i < 200; ++i) {
            if (::waitpid(pid_, &status, WNOHANG) != 0) return;
            std::this_thread::sleep_for(std::chrono::milliseconds(10));
        }
        ::kill(pid_, SIGKILL);
        ::waitpid(pid_, &status, 0);
    }
}

void Subprocess::close_input() {
    if (fd_ >= 0) ::shutdown(fd_, SHUT_WR);
}

std::string Subprocess::describe_exit() {
    int status = 0;
    for (int i = 0; i < 50; ++i) {
        const pid_t done = ::waitpid(pid_, &status, WNOHANG);
        if (done == pid_) {
            pid_ = -1;
            if (WIFEXITED(status)) return "exit status " + std::to_string(WEXITSTATUS(status));
            if (WIFSIGNALED(status)) return "signal " + std::to_string(WTERMSIG(status));
            return "unknown status";
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    return "output closed";
}

void Subprocess::write_all(std::span<const std::uint8_t> bytes) {
    std::size_t done = 0;
    while (done < bytes.size()) {
        const ssize_t k = ::send(fd_, bytes.data() + done, bytes.size() - done, MSG_NOSIGNAL);
        if (k < 0) {
            if (errno == EINTR) continue;
            if (errno == EPIPE || errno == ECONNRESET)
                throw ProcessExitedError("bridge process exited (" + describe_exit() + ")");
            throw BridgeError(std::string("bridge write failed: ") + std::strerror(errno));
        }
        done += static_cast<std::size_t>(k);
    }
}

void Subprocess::read_exact(std::span<std::uint8_t> out, std::chrono::milliseconds timeout) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    std::size_t done = 0;
    while (done < out.size()) {
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
            deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0)
            throw TimeoutError("bridge process did not answer within " +
                               std::to_string(timeout.count()) + " ms");
        pollfd p{fd_, POLLIN, 0};
        const int ready = ::poll(&p, 1, static_cast<int>(left.count()));
        if (ready < 0) {
            if (errno == EINTR) continue;
            throw BridgeError(std::string("bridge poll failed: ") + std::strerror(errno));
        }
        if (ready == 0) continue;
        const ssize_t k = ::recv(fd_, out.data() + done, out.size() - done, 0);
        if (k == 0) throw ProcessExitedError("bridge process exited (" + describe_exit() + ")");
        if (k < 0) {
            if (errno == EINTR || errno == EAGAIN) continue;
            if (errno == ECONNRESET)
                throw ProcessExitedError("bridge process exited (" + describe_exit() + ")");
            throw BridgeError(std::string("bridge read failed: ") + std::strerror(errno));
        }
        done += static_cast<std::size_t>(k);
    }
}

}  // namespace ddrm::bridge

namespace ddrm {

ExternalDenoiser::ExternalDenoiser(const std::string& command, Index n, std::uint32_t channels,
                                   std::uint32_t side, std::chrono::milliseconds timeout)
    : process_(command), n_(n), timeout_(timeout) {
    require(n > 0, "external denoiser needs n > 0");
    using namespace bridge;
    process_.write_all(encode_hello(Hello{static_cast<std::uint64_t>(n), channels, side}));
    std::uint8_t buf[9];
    process_.read_exact(buf, timeout_);
    const HelloReply reply = decode_hello_reply(buf);
    if (reply.version != kProtocolVersion)
        throw HandshakeError("bridge speaks protocol version " + std::to_string(reply.version));
    switch (static_cast<HandshakeStatus>(reply.status)) {
        case HandshakeStatus::ok: return;
        case HandshakeStatus::dimension_mismatch:
            throw HandshakeError("bridge rejected the signal dimensions (n=" + std::to_string(n) +
                                 ")");
        case HandshakeStatus::unsupported_version:
            throw HandshakeError("bridge rejected protocol version " +
                                 std::to_string(kProtocolVersion));
    }
    throw HandshakeError("bridge handshake failed with status " + std::to_string(reply.status));
}

Vector ExternalDenoiser::predict_x0(const Vector& x_t, double sigma_t, int step,
                                    std::optional<std::int64_t> class_label) {
    using namespace bridge;
    require_size("external denoiser", n_, x_t.size());
    require(step >= 0, "step index must be >= 0");
    Request req;
    req.step = static_cast<std::uint32_t>(step);
    req.sigma = sigma_t;
    req.class_label = class_label.value_or(-1);
    req.payload.resize(static_cast<std::size_t>(n_));
    for (Index i = 0; i < n_; ++i) req.payload[static_cast<std::size_t>(i)] = static_cast<float>(x_t[i]);
    process_.write_all(encode_request(req));

    std::uint8_t type = 0;
    process_.read_exact({&type, 1}, timeout_);
    if (type == kErrorFrame) {
        std::uint8_t len_bytes[4];
        process_.read_exact(len_bytes, timeout_);
        const std::uint32_t len = static_cast<std::uint32_t>(len_bytes[0]) |
                                  (static_cast<std::uint32_t>(len_bytes[1]) << 8) |
                                  (static_cast<std::uint32_t>(len_bytes[2]) << 16) |
                                  (static_cast<std::uint32_t>(len_bytes[3]) << 24);
        std::string message(len, '\0');
        process_.read_exact({reinterpret_cast<std::uint8_t*>(message.data()), len}, timeout_);
        throw ServerError("bridge server error: " + message);
    }
    if (type != kResponseFrame)
        throw ProtocolError("bridge sent unexpected frame type " + std::to_string(type));

    Bytes frame(2 + 4 * static_cast<std::size_t>(n_));
    frame[0] = type;
    process_.read_exact({frame.data() + 1, frame.size() - 1}, timeout_);
    const Response resp = decode_response(frame, static_cast<std::uint64_t>(n_));
    if (resp.status != 0)
        throw ServerError("bridge response status " + std::to_string(resp.status));
    Vector out(n_);
    for (Index i = 0; i < n_; ++i) out[i] = resp.payload[static_cast<std::size_t>(i)];
    return out;
}

}  // namespace ddrm
