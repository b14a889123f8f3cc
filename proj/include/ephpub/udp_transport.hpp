#pragma once

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <ctime>
#include <optional>
#include <thread>

#include <sodium.h>

#include "dns_wire.hpp"
#include "epo.hpp"

namespace ephpub {

// Plain UDP resolver client, one ephemeral socket per in-flight query so any
// number of threads can drive it at once.  Transaction IDs come from the CSPRNG
// and a connect()ed socket makes the kernel drop off-path datagrams; anything
// unparseable inside the wait window is ignored rather than trusted.
class UdpTransport final : public Transport {
public:
    struct Options {
        double timeout_ms = 2000;
        int retries = 2;
        unsigned parallelism = 64;
        std::string proxy; // config hook; routing through it is not implemented
    };

    UdpTransport() : UdpTransport(Options{}) {}

    explicit UdpTransport(Options opt) : opt_(std::move(opt)) {
        if (opt_.timeout_ms <= 0) throw InputError("timeout must be positive");
        if (opt_.retries < 0) throw InputError("retry count cannot be negative");
        if (!opt_.proxy.empty())
            throw InputError("proxy routing is not implemented; unset proxy to use direct UDP");
        ensure_sodium();
    }

    QueryOutcome query(const ResolverEndpoint& ep, const DnsQuestion& q) override {
        auto started = std::chrono::steady_clock::now();
        for (int attempt = 0; attempt <= opt_.retries; ++attempt) {
            if (auto out = attempt_once(ep, q)) {
                out->rtt_ms = elapsed_ms(started);
                return *out;
            }
        }
        return {OutcomeKind::Timeout, 0, "", elapsed_ms(started)};
    }

    uint64_t now() override { return uint64_t(::time(nullptr)); }

    void wait_until(uint64_t t) override {
        while (now() < t) {
            uint64_t left = t - now();
            std::this_thread::sleep_for(std::chrono::milliseconds(left > 1 ? 900 : 100));
        }
    }

    unsigned max_parallelism() const override { return opt_.parallelism; }

private:
    static double elapsed_ms(std::chrono::steady_clock::time_point t0) {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();
    }

    struct Fd {
        int fd;
        ~Fd() {
            if (fd >= 0) ::close(fd);
        }
    };

    // One send plus however many receives fit in the window; nullopt means
    // the attempt produced nothing usable and the caller may retry.
    std::optional<QueryOutcome> attempt_once(const ResolverEndpoint& ep, const DnsQuestion& q) {
        Fd sock{::socket(AF_INET, SOCK_DGRAM | SOCK_CLOEXEC, 0)};
        if (sock.fd < 0) throw InputError(std::string("socket: ") + strerror(errno));

        sockaddr_in dst{};
        dst.sin_family = AF_INET;
        dst.sin_port = htons(ep.port);
        dst.sin_addr.s_addr = htonl(ep.addr);
        if (::connect(sock.fd, reinterpret_cast<const sockaddr*>(&dst), sizeof dst) < 0)
            return std::nullopt;

        uint16_t txid;
        randombytes_buf(&txid, sizeof txid);
        auto wire = encode_query(q, txid);
        if (::send(sock.fd, wire.data(), wire.size(), 0) < 0) return std::nullopt;

        auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::microseconds(int64_t(opt_.timeout_ms * 1000.0));
        uint8_t buf[4096];
        for (;;) {
            auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                            deadline - std::chrono::steady_clock::now())
                            .count();
            if (left <= 0) return std::nullopt;
            pollfd pfd{sock.fd, POLLIN, 0};
            int r = ::poll(&pfd, 1, int(left));
            if (r < 0) {
                if (errno == EINTR) continue;
                return std::nullopt;
            }
            if (r == 0) return std::nullopt;
            ssize_t n = ::recv(sock.fd, buf, sizeof buf, 0);
            if (n <= 0) {
                if (n < 0 && (errno == ECONNREFUSED || errno == EHOSTUNREACH ||
                              errno == ENETUNREACH))
                    return std::nullopt; // ICMP said nobody is listening
                continue;
            }
            try {
                return parse_response(byte_view(buf, size_t(n)), txid);
            } catch (const ParseError&) {
                continue; // junk or a foreign transaction: keep the window open
            }
        }
    }

    Options opt_;
};

} // namespace ephpub
