#include "posbias/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>
#include <json.hpp>

#include "posbias/error.hpp"

namespace posbias {
namespace {

// Pretty-printing JSON writer with fixed-precision reals. nlohmann cannot
// pin the number of decimals, so only string escaping is delegated to it.
class JsonWriter {
 public:
  void begin_object() { open('{'); }
  void end_object() { close('}'); }
  void begin_array() { open('['); }
  void end_array() { close(']'); }

  JsonWriter& key(std::string_view name) {
    separator();
    out_ += quote(name);
    out_ += ": ";
    pending_key_ = true;
    return *this;
  }

  void string(std::string_view value) { scalar(quote(value)); }
  void real(double value) { scalar(format_real(value)); }
  void integer(std::size_t value) { scalar(std::to_string(value)); }
  void integer(std::uint64_t value, int) { scalar(std::to_string(value)); }

  void reals(const std::vector<double>& values) {
    begin_array();
    for (double v : values) real(v);
    end_array();
  }

  std::string finish() {
    out_.push_back('\n');
    return std::move(out_);
  }

 private:
  static std::string quote(std::string_view s) { return nlohmann::json(std::string(s)).dump(); }

  void separator() {
    if (pending_key_) {
      pending_key_ = false;
      return;
    }
    if (!first_.empty()) {
      if (!first_.back()) out_.push_back(',');
      first_.back() = false;
      newline();
    }
  }

  void newline() {
    out_.push_back('\n');
    out_.append(2 * first_.size(), ' ');
  }

  void scalar(const std::string& text) {
    separator();
    out_ += text;
  }

  void open(char bracket) {
    separator();
    out_.push_back(bracket);
    first_.push_back(true);
  }

  void close(char bracket) {
    const bool empty = first_.back();
    first_.pop_back();
    if (!empty) newline();
    out_.push_back(bracket);
  }

  std::string out_;
  std::vector<bool> first_;
  bool pending_key_ = false;
};

std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(text);
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string xml_escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      case '\'':
        out += "&apos;";
        break;
      default:
        out.push_back(c);
    }
  }
  return out;
}

std::string coord(double v) {
  auto text = fmt::format("{:.2f}", v);
  return text == "-0.00" ? "0.00" : text;
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
  out << content;
  out.flush();
  if (!out) throw IoError(fmt::format("write failure on '{}'", path.string()));
}

constexpr std::string_view kPalette[] = {"#222222", "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                         "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#17becf"};

std::string_view color_for(std::size_t series) { return kPalette[series % std::size(kPalette)]; }

// Upper y-axis bound: the largest mass rounded up to the next tenth.
double mass_axis_max(const AnalysisBundle& bundle) {
  double top = *std::max_element(bundle.gold_distribution.mass.begin(), bundle.gold_distribution.mass.end());
  for (const auto& model : bundle.models) {
    top = std::max(top, *std::max_element(model.model_distribution.mass.begin(), model.model_distribution.mass.end()));
  }
  return std::clamp(std::ceil(top * 10.0 - 1e-9) / 10.0, 0.1, 1.0);
}

}  // namespace

ShortArticlePolicy parse_short_article_policy(std::string_view name) {
  if (name == "skip") return ShortArticlePolicy::skip;
  if (name == "error") return ShortArticlePolicy::error;
  throw ConfigError(fmt::format("unknown short-article policy '{}' (expected skip or error)", name));
}

std::string_view short_article_policy_name(ShortArticlePolicy policy) {
  return policy == ShortArticlePolicy::skip ? "skip" : "error";
}

std::string format_real(double value) {
  auto text = fmt::format("{:.6f}", value);
  return text == "-0.000000" ? "0.000000" : text;
}

std::string render_json(const AnalysisBundle& bundle) {
  JsonWriter w;
  w.begin_object();
  w.key("corpus_name").string(bundle.corpus_name);
  w.key("k").integer(bundle.k());
  w.key("config").begin_object();
  w.key("phi").string(phi_name(bundle.settings.mapping.phi));
  w.key("top_n").integer(bundle.settings.mapping.top_n);
  w.key("k_prime").integer(bundle.settings.k_prime);
  w.key("bin_positions").string(bin_positions_name(bundle.settings.bins));
  w.key("aggregation").string(aggregation_name(bundle.settings.aggregation));
  w.key("short_article_policy").string(short_article_policy_name(bundle.settings.short_articles));
  w.key("seed").integer(bundle.settings.seed, 0);
  w.end_object();
  w.key("articles_analyzed").integer(bundle.articles_analyzed);
  w.key("skipped_short_articles").integer(bundle.skipped_short_articles);
  w.key("gold_distribution").begin_object();
  w.key("mass").reals(bundle.gold_distribution.mass);
  w.key("support").reals(bundle.gold_distribution.support);
  w.key("lead_bias_fraction").real(bundle.gold_lead_bias_fraction);
  w.key("unmapped_fraction").real(bundle.gold_unmapped_fraction);
  w.end_object();
  w.key("models").begin_array();
  for (const auto& model : bundle.models) {
    w.begin_object();
    w.key("name").string(model.model_name);
    w.key("wasserstein").real(model.wasserstein);
    w.key("rouge").begin_object();
    w.key("r1").real(model.rouge.r1);
    w.key("r2").real(model.rouge.r2);
    w.key("rl").real(model.rouge.rl);
    w.end_object();
    w.key("lead_bias_fraction").real(model.lead_bias_fraction);
    w.key("unmapped_fraction").real(model.unmapped_fraction);
    w.key("refusals").integer(model.refusals);
    w.key("skipped_short_articles").integer(model.skipped_short_articles);
    w.key("distribution").begin_object();
    w.key("mass").reals(model.model_distribution.mass);
    w.end_object();
    w.end_object();
  }
  w.end_array();
  w.key("correlations").begin_array();
  for (const auto& [metric, result] : bundle.correlations) {
    w.begin_object();
    w.key("metric").string(rouge_metric_name(metric));
    w.key("rho").real(result.rho);
    w.key("p_value").real(result.p_value);
    w.key("n").integer(result.n);
    w.key("method").string(method_name(result.method));
    w.key("stars").string(stars_text(result.stars));
    w.end_object();
  }
  w.end_array();
  w.end_object();
  return w.finish();
}

std::string render_distributions_csv(const AnalysisBundle& bundle) {
  std::string out = "series";
  for (std::size_t j = 1; j <= bundle.k(); ++j) out += fmt::format(",seg{}", j);
  out.push_back('\n');
  const auto row = [&](std::string_view name, const std::vector<double>& mass) {
    out += csv_field(name);
    for (double m : mass) out += "," + format_real(m);
    out.push_back('\n');
  };
  row("gold", bundle.gold_distribution.mass);
  for (const auto& model : bundle.models) row(model.model_name, model.model_distribution.mass);
  return out;
}

std::string render_metrics_csv(const AnalysisBundle& bundle) {
  std::string out = "model,wasserstein,r1,r2,rl,lead_bias_fraction,unmapped_fraction\n";
  for (const auto& m : bundle.models) {
    out += fmt::format("{},{},{},{},{},{},{}\n", csv_field(m.model_name), format_real(m.wasserstein),
                       format_real(m.rouge.r1), format_real(m.rouge.r2), format_real(m.rouge.rl),
                       format_real(m.lead_bias_fraction), format_real(m.unmapped_fraction));
  }
  return out;
}

std::string render_correlations_csv(const AnalysisBundle& bundle) {
  std::string out = "metric,rho,p_value,stars\n";
  for (const auto& [metric, result] : bundle.correlations) {
    out += fmt::format("{},{},{},{}\n", rouge_metric_name(metric), format_real(result.rho),
                       format_real(result.p_value), stars_text(result.stars));
  }
  return out;
}

std::string render_distribution_svg(const AnalysisBundle& bundle) {
  constexpr double kWidth = 720;
  constexpr double kHeight = 420;
  constexpr double kLeft = 70;
  constexpr double kTop = 30;
  constexpr double kPlotWidth = 440;
  constexpr double kPlotHeight = 320;
  const std::size_t k = bundle.k();
  const double y_max = mass_axis_max(bundle);
  const auto x_of = [&](std::size_t segment) {
    if (k == 1) return kLeft + kPlotWidth / 2;
    return kLeft + kPlotWidth * static_cast<double>(segment - 1) / static_cast<double>(k - 1);
  };
  const auto y_of = [&](double mass) { return kTop + kPlotHeight * (1.0 - mass / y_max); };

  std::string svg;
  svg += fmt::format(
      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\">\n",
      coord(kWidth), coord(kHeight));
  svg += fmt::format("<title>{}</title>\n", xml_escape("Positional distributions: " + bundle.corpus_name));
  svg += fmt::format(
      "<g class=\"plot\" data-x0=\"{}\" data-y0=\"{}\" data-width=\"{}\" data-height=\"{}\" data-k=\"{}\" "
      "data-y-max=\"{}\">\n",
      coord(kLeft), coord(kTop), coord(kPlotWidth), coord(kPlotHeight), k, format_real(y_max));
  svg += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#999999\"/>\n",
                     coord(kLeft), coord(kTop), coord(kPlotWidth), coord(kPlotHeight));
  for (std::size_t j = 1; j <= k; ++j) {
    svg += fmt::format("<text class=\"x-tick\" x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"11\">{}</text>\n",
                       coord(x_of(j)), coord(kTop + kPlotHeight + 16), j);
  }
  for (int t = 0; t <= 4; ++t) {
    const double value = y_max * t / 4.0;
    svg += fmt::format("<text class=\"y-tick\" x=\"{}\" y=\"{}\" text-anchor=\"end\" font-size=\"11\">{:.3f}</text>\n",
                       coord(kLeft - 6), coord(y_of(value) + 4), value);
  }
  svg += fmt::format("<text class=\"axis-label\" x=\"{}\" y=\"{}\" text-anchor=\"middle\">Segment</text>\n",
                     coord(kLeft + kPlotWidth / 2), coord(kTop + kPlotHeight + 40));
  svg += fmt::format(
      "<text class=\"axis-label\" x=\"{0}\" y=\"{1}\" text-anchor=\"middle\" transform=\"rotate(-90 {0} {1})\">"
      "Fraction of summary sentences</text>\n",
      coord(20), coord(kTop + kPlotHeight / 2));

  std::vector<std::pair<std::string, const std::vector<double>*>> series;
  series.emplace_back("gold", &bundle.gold_distribution.mass);
  for (const auto& model : bundle.models) series.emplace_back(model.model_name, &model.model_distribution.mass);

  for (std::size_t s = 0; s < series.size(); ++s) {
    std::string points;
    for (std::size_t j = 1; j <= k; ++j) {
      if (!points.empty()) points.push_back(' ');
      points += coord(x_of(j)) + "," + coord(y_of((*series[s].second)[j - 1]));
    }
    svg += fmt::format("<polyline class=\"series\" data-series=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\" "
                       "points=\"{}\"/>\n",
                       xml_escape(series[s].first), color_for(s), points);
  }
  svg += "</g>\n<g class=\"legend\">\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const double y = kTop + 10 + 20.0 * static_cast<double>(s);
    const double x = kLeft + kPlotWidth + 20;
    svg += fmt::format(
        "<g class=\"legend-entry\"><line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"2\"/>"
        "<text x=\"{}\" y=\"{}\" font-size=\"12\">{}</text></g>\n",
        coord(x), coord(y), coord(x + 24), coord(y), color_for(s), coord(x + 30), coord(y + 4),
        xml_escape(series[s].first));
  }
  svg += "</g>\n</svg>\n";
  return svg;
}

std::string render_bias_bars_svg(const AnalysisBundle& bundle) {
  if (bundle.models.empty()) throw DataError("bias bar chart needs at least one model");
  constexpr double kLeft = 70;
  constexpr double kTop = 30;
  constexpr double kPlotHeight = 300;
  constexpr double kGroupWidth = 90;
  constexpr double kBarWidth = 30;

  std::vector<const BiasReport*> models;
  for (const auto& m : bundle.models) models.push_back(&m);
  std::sort(models.begin(), models.end(), [](auto* a, auto* b) { return a->model_name < b->model_name; });

  const auto& support = bundle.gold_distribution.support;
  const double w_max = support.size() > 1 ? support.back() - support.front() : 1.0;
  const double plot_width = kGroupWidth * static_cast<double>(models.size());
  const double width = kLeft + plot_width + 80;
  const double height = kTop + kPlotHeight + 70;
  const double base = kTop + kPlotHeight;

  std::string svg;
  svg += fmt::format(
      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\">\n",
      coord(width), coord(height));
  svg += fmt::format("<title>{}</title>\n", xml_escape("ROUGE-1 and position bias: " + bundle.corpus_name));
  svg += fmt::format(
      "<g class=\"plot\" data-x0=\"{}\" data-y0=\"{}\" data-height=\"{}\" data-r1-max=\"{}\" data-w-max=\"{}\">\n",
      coord(kLeft), coord(kTop), coord(kPlotHeight), format_real(1.0), format_real(w_max));
  svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"#333333\"/>\n", coord(kLeft),
                     coord(kTop), coord(base));
  svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"#333333\"/>\n",
                     coord(kLeft + plot_width), coord(kTop), coord(base));
  svg += fmt::format("<line x1=\"{0}\" y1=\"{2}\" x2=\"{1}\" y2=\"{2}\" stroke=\"#333333\"/>\n", coord(kLeft),
                     coord(kLeft + plot_width), coord(base));
  for (int t = 0; t <= 4; ++t) {
    const double frac = t / 4.0;
    const double y = base - kPlotHeight * frac;
    svg += fmt::format("<text class=\"y-tick r1\" x=\"{}\" y=\"{}\" text-anchor=\"end\" font-size=\"11\">{:.2f}</text>\n",
                       coord(kLeft - 6), coord(y + 4), frac);
    svg += fmt::format("<text class=\"y-tick wasserstein\" x=\"{}\" y=\"{}\" font-size=\"11\">{:.3f}</text>\n",
                       coord(kLeft + plot_width + 6), coord(y + 4), frac * w_max);
  }
  svg += fmt::format(
      "<text class=\"axis-label\" x=\"{0}\" y=\"{1}\" text-anchor=\"middle\" transform=\"rotate(-90 {0} {1})\">"
      "ROUGE-1</text>\n",
      coord(20), coord(kTop + kPlotHeight / 2));
  svg += fmt::format(
      "<text class=\"axis-label\" x=\"{0}\" y=\"{1}\" text-anchor=\"middle\" transform=\"rotate(90 {0} {1})\">"
      "Wasserstein distance</text>\n",
      coord(kLeft + plot_width + 60), coord(kTop + kPlotHeight / 2));

  for (std::size_t i = 0; i < models.size(); ++i) {
    const auto& m = *models[i];
    const double x = kLeft + kGroupWidth * static_cast<double>(i) + (kGroupWidth - 2 * kBarWidth) / 2;
    const double r1_height = kPlotHeight * std::clamp(m.rouge.r1, 0.0, 1.0);
    const double w_height = kPlotHeight * std::clamp(m.wasserstein / w_max, 0.0, 1.0);
    svg += fmt::format("<g class=\"model\" data-model=\"{}\">\n", xml_escape(m.model_name));
    svg += fmt::format(
        "<rect class=\"bar r1\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#1f77b4\"/>\n", coord(x),
        coord(base - r1_height), coord(kBarWidth), coord(r1_height));
    svg += fmt::format(
        "<rect class=\"bar wasserstein\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#d62728\"/>\n",
        coord(x + kBarWidth), coord(base - w_height), coord(kBarWidth), coord(w_height));
    svg += fmt::format(
        "<text class=\"value r1\" x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"10\">{:.3f}</text>\n",
        coord(x + kBarWidth / 2), coord(base - r1_height - 4), m.rouge.r1);
    svg += fmt::format(
        "<text class=\"value wasserstein\" x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"10\">{:.3f}</text>\n",
        coord(x + 1.5 * kBarWidth), coord(base - w_height - 4), m.wasserstein);
    svg += fmt::format("<text class=\"model-label\" x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"12\">{}</text>\n",
                       coord(x + kBarWidth), coord(base + 18), xml_escape(m.model_name));
    svg += "</g>\n";
  }
  svg += "</g>\n</svg>\n";
  return svg;
}

void emit_json(const AnalysisBundle& bundle, const std::filesystem::path& path) {
  write_text(path, render_json(bundle));
}

void emit_csv(const AnalysisBundle& bundle, const std::filesystem::path& dir) {
  write_text(dir / "distributions.csv", render_distributions_csv(bundle));
  write_text(dir / "metrics.csv", render_metrics_csv(bundle));
  write_text(dir / "correlations.csv", render_correlations_csv(bundle));
}

void render_distribution_chart(const AnalysisBundle& bundle, const std::filesystem::path& path) {
  write_text(path, render_distribution_svg(bundle));
}

void render_bias_bars(const AnalysisBundle& bundle, const std::filesystem::path& path) {
  write_text(path, render_bias_bars_svg(bundle));
}

}  // namespace posbias
