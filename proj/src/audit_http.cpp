#include "streamlens/audit.hpp"

#include <httplib.h>
#include <json.hpp>

namespace streamlens::audit {

struct HttpClient::Impl {
    std::unique_ptr<httplib::Client> client;
    std::string prefix;
};

HttpClient::HttpClient(const std::string& endpoint, std::chrono::milliseconds timeout) : impl_(std::make_unique<Impl>()) {
    const auto scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos || endpoint.compare(0, scheme_end, "http") != 0) {
        throw ConfigError("audit.endpoint", "expected http://host[:port][/prefix], got '" + endpoint + "'");
    }
    const auto path_start = endpoint.find('/', scheme_end + 3);
    const auto host = endpoint.substr(0, path_start);
    if (path_start != std::string::npos) impl_->prefix = endpoint.substr(path_start);
    while (!impl_->prefix.empty() && impl_->prefix.back() == '/') impl_->prefix.pop_back();
    impl_->client = std::make_unique<httplib::Client>(host);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
    impl_->client->set_connection_timeout(secs.count(), usecs.count());
    impl_->client->set_read_timeout(secs.count(), usecs.count());
}

HttpClient::~HttpClient() = default;

namespace {

nlohmann::json checked_body(const httplib::Result& res, const std::string& what) {
    if (!res) throw TransportError(what + ": " + httplib::to_string(res.error()));
    if (res->status != 200) throw TransportError(what + ": HTTP " + std::to_string(res->status));
    auto body = nlohmann::json::parse(res->body, nullptr, false);
    if (body.is_discarded() || !body.is_object()) throw TransportError(what + ": malformed JSON response");
    return body;
}

}  // namespace

std::unordered_set<std::string> HttpClient::batch_lookup(std::span<const std::string> ids) {
    nlohmann::json request = {{"ids", std::vector<std::string>(ids.begin(), ids.end())}};
    const auto body = checked_body(impl_->client->Post(impl_->prefix + "/lookup", request.dump(), "application/json"),
                                   "lookup");
    std::unordered_set<std::string> out;
    const auto it = body.find("existing");
    if (it == body.end() || !it->is_array()) throw TransportError("lookup: response lacks 'existing'");
    for (const auto& v : *it) {
        if (!v.is_string()) throw TransportError("lookup: non-string id in response");
        out.insert(v.get<std::string>());
    }
    return out;
}

AccountStatus HttpClient::probe(const std::string& id) {
    const auto body = checked_body(impl_->client->Get(impl_->prefix + "/probe/" + id),
                                   "probe " + id);
    const auto it = body.find("status");
    if (it == body.end() || !it->is_string()) throw TransportError("probe: response lacks 'status'");
    try {
        return parse_account_status(it->get<std::string>());
    } catch (const InputError& e) {
        throw TransportError(std::string("probe: ") + e.what());
    }
}

}  // namespace streamlens::audit
