#pragma once

#include "netgent/environment.hpp"

#include <memory>
#include <optional>
#include <string>

namespace netgent::env {

// Adapter for the W3C remote-browser protocol (session/element/execute
// endpoints). Proxy and profile-directory settings are opaque pass-through
// strings forwarded in the session capabilities. OS-level input realism is
// unavailable over this protocol, so mouse paths degrade to element-origin
// moves and typing to atomic send-keys (capabilities report it).
struct WebDriverConfig {
    std::string endpoint_url;               // e.g. http://127.0.0.1:4444
    std::optional<std::string> proxy;       // NETGENT_PROXY pass-through
    std::optional<std::string> profile_dir; // persistent user profile pass-through
    int poll_interval_ms = 100;             // wait_for polling
};

class WebDriverEnv : public Environment {
public:
    explicit WebDriverEnv(WebDriverConfig config);
    ~WebDriverEnv() override;

    WebDriverEnv(const WebDriverEnv&) = delete;
    WebDriverEnv& operator=(const WebDriverEnv&) = delete;

    page::PageSnapshot observe() override;
    StepResult perform(const actions::Instruction& ins, const actions::RealismParams& realism,
                       int instruction_index = 0) override;
    EnvCapabilities capabilities() const override;

    const std::string& session_id() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace netgent::env
