"""Command-line front end for the forecasting pipeline.

Every pipeline stage is a subcommand; every numeric result is also
available as JSON via ``--json``. Errors leave on stderr with the
machine-parseable prefix ``refcast: error[CODE]:`` and a meaningful
exit code:

    0  success
    1  validation or domain error
    2  insufficient data (class too small, no match, too few pairs)
    3  I/O error
    4  usage error

Set ``REFCAST_NO_COLOR`` to disable styled output.
"""

from __future__ import annotations

import dataclasses
import json
import os
import sys
import warnings

import click

from . import __version__
from .biassim import calibration_report, load_config, simulate, write_calibration_csv
from .core import Money
from .engine import (
    EstimateVariable,
    IntuitiveEstimate,
    ReliabilityEstimate,
    forecast_with_uplift,
    regress,
)
from .errors import DatasetInvalid, IoError, RefcastError, RefcastWarning
from .governance import (
    CostIncreaseEvent,
    apportion_cost_increase,
    check_funding,
    classify,
    findings_table,
    irr as compute_irr,
    load_cashflows,
    load_funding,
    load_profile,
    load_register,
    npv as compute_npv,
    read_json_doc,
    validate_risk_register,
)
from .ingest import load_dataset, save_dataset
from .refclass import (
    ClassFilter,
    UpliftQuery,
    build_class,
    comparability_test,
    load_class,
    save_class,
    summarize,
    uplift as class_uplift,
)
from .report import five_step_report


def _use_color() -> bool:
    return not os.environ.get("REFCAST_NO_COLOR")


def _styled(text: str, **kwargs) -> str:
    if _use_color():
        return click.style(text, **kwargs)
    return text


def _echo_json(doc) -> None:
    click.echo(json.dumps(doc, indent=2))


def _status_word(passed: bool | None) -> str:
    if passed is None:
        return _styled("INFO", fg="cyan")
    if passed:
        return _styled("PASS", fg="green")
    return _styled("FAIL", fg="red")


def _print_findings(findings) -> None:
    if _use_color():
        rule_width = max(max(len(f.rule_id) for f in findings), len("rule"))
        click.echo(f"{'rule':<{rule_width}}  {'status':<6}  detail")
        for f in findings:
            pad = " " * (6 - len(f.status))
            click.echo(f"{f.rule_id:<{rule_width}}  {_status_word(f.passed)}{pad}  {f.detail}")
    else:
        click.echo(findings_table(findings), nl=False)


def _money_options(f):
    f = click.option(
        "--base-year",
        type=int,
        default=None,
        help="Price base year; required with --basis constant.",
    )(f)
    f = click.option(
        "--basis",
        type=click.Choice(["constant", "nominal"]),
        default="nominal",
        show_default=True,
        help="Price basis the amounts are expressed in.",
    )(f)
    f = click.option("--currency", default="GBP", show_default=True, help="Currency code.")(f)
    return f


def _build_money(amount: str, currency: str, basis: str, base_year: int | None) -> Money:
    if basis == "constant":
        if base_year is None:
            raise click.UsageError("--basis constant requires --base-year")
        return Money.constant(amount, currency, base_year)
    if base_year is not None:
        raise click.UsageError("--base-year only applies with --basis constant")
    return Money.nominal(amount, currency)


def _load_filter(path: str) -> ClassFilter:
    return ClassFilter.from_json(read_json_doc(path))


@click.group(name="refcast")
@click.version_option(__version__, prog_name="refcast")
def cli() -> None:
    """Outside-view cost forecasting from reference classes of past projects."""


@cli.command()
@click.argument("dataset_path", metavar="DATASET")
@click.option(
    "--format",
    "format_",
    type=click.Choice(["csv", "json"]),
    default=None,
    help="Input format; inferred from the extension when omitted.",
)
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write the validated dataset here (canonical form; format from extension).")
@click.option("--json", "as_json", is_flag=True, help="Emit the validation report as JSON.")
def ingest(dataset_path: str, format_: str | None, out: str | None, as_json: bool) -> None:
    """Load and validate a project dataset."""
    dataset, vreport = load_dataset(dataset_path, format=format_)
    if as_json:
        doc = vreport.to_json()
        doc["records"] = len(dataset) if dataset else 0
        _echo_json(doc)
    else:
        for issue in vreport.errors:
            click.echo(f"error: {issue.record_id}: {issue.field}: {issue.message}")
        for issue in vreport.warnings:
            click.echo(f"warning: {issue.record_id}: {issue.field}: {issue.message}")
        if dataset is not None:
            click.echo(
                f"ok: {len(dataset)} record(s), "
                f"{len(vreport.warnings)} warning(s)"
            )
    if dataset is None:
        raise DatasetInvalid(vreport)
    if out:
        save_dataset(dataset, out)
        if not as_json:
            click.echo(f"wrote {out}")


@cli.command(name="class-build")
@click.argument("dataset_path", metavar="DATASET")
@click.option("--filter", "filter_path", required=True, type=click.Path(dir_okay=False), help="Class filter JSON file.")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write the built class here as JSON.")
@click.option("--json", "as_json", is_flag=True, help="Emit the class header as JSON.")
def class_build(dataset_path: str, filter_path: str, out: str | None, as_json: bool) -> None:
    """Screen a dataset into a reference class."""
    dataset, vreport = load_dataset(dataset_path)
    if dataset is None:
        raise DatasetInvalid(vreport)
    class_filter = _load_filter(filter_path)
    ref_class = build_class(dataset, class_filter)
    if out:
        save_class(ref_class, out)
    if as_json:
        doc = {
            "members": len(ref_class),
            "metric": class_filter.metric.value,
            "filter": class_filter.to_json(),
        }
        if out:
            doc["saved"] = out
        _echo_json(doc)
    else:
        click.echo(f"built class: {len(ref_class)} member(s), metric {class_filter.metric.value}")
        if out:
            click.echo(f"wrote {out}")


@cli.command(name="class-test")
@click.argument("class_a", metavar="CLASS_A")
@click.argument("class_b", metavar="CLASS_B")
@click.option("--alpha", type=float, default=0.05, show_default=True, help="Significance level for the two-sample KS test.")
@click.option("--json", "as_json", is_flag=True, help="Emit the test result as JSON.")
def class_test(class_a: str, class_b: str, alpha: float, as_json: bool) -> None:
    """Test two reference classes for distributional comparability."""
    a = load_class(class_a)
    b = load_class(class_b)
    result = comparability_test(a, b, alpha=alpha)
    if as_json:
        _echo_json(
            {
                "statistic": result.statistic,
                "p_value": result.p_value,
                "alpha": alpha,
                "comparable": result.comparable,
            }
        )
    else:
        click.echo(f"KS statistic {result.statistic:.4f}  p-value {result.p_value:.4f}")
        click.echo(
            f"comparable at alpha {alpha:g}: {'yes' if result.comparable else 'no'}"
        )


@cli.command(name="summarize")
@click.argument("class_path", metavar="CLASS")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write the ECDF as CSV here.")
@click.option("--json", "as_json", is_flag=True, help="Emit the summary as JSON.")
def summarize_cmd(class_path: str, out: str | None, as_json: bool) -> None:
    """Summarize a class's deviation distribution."""
    summary = summarize(load_class(class_path))
    if as_json:
        _echo_json(summary.to_json())
    else:
        click.echo(f"n       {summary.n}")
        click.echo(f"mean    {summary.mean:+.4f}")
        click.echo(f"median  {summary.median:+.4f}")
        click.echo(f"min     {summary.min:+.4f}")
        click.echo(f"max     {summary.max:+.4f}")
        click.echo(f"stdev   {summary.stdev:.4f}")
    if out:
        summary.write_ecdf_csv(out)
        if not as_json:
            click.echo(f"wrote {out}")


@cli.command(name="uplift")
@click.option("--class", "class_path", required=True, type=click.Path(dir_okay=False), help="Reference class JSON file.")
@click.option("--risk", type=float, required=True, help="Acceptable probability of exceeding the uplifted budget.")
@click.option("--clamp-nonnegative", is_flag=True, help="Floor a negative uplift at zero instead of warning.")
@click.option("--json", "as_json", is_flag=True, help="Emit the uplift as JSON.")
def uplift_cmd(class_path: str, risk: float, clamp_nonnegative: bool, as_json: bool) -> None:
    """Uplift to add to a base estimate at the accepted overrun risk."""
    ref_class = load_class(class_path)
    value = class_uplift(ref_class, UpliftQuery(risk), clamp_nonnegative=clamp_nonnegative)
    if as_json:
        _echo_json({"risk": risk, "uplift": value})
    else:
        click.echo(f"uplift {value:.2f} ({value * 100:+.2f}%)")


@cli.command()
@click.option("--class", "class_path", required=True, type=click.Path(dir_okay=False), help="Cost-overrun reference class JSON file.")
@click.option("--base", required=True, help="Base cost estimate (number; unit via --currency/--basis).")
@click.option("--risk", type=float, required=True, help="Acceptable probability of exceeding the budget.")
@click.option("--clamp-nonnegative", is_flag=True, help="Floor a negative uplift at zero instead of warning.")
@_money_options
@click.option("--json", "as_json", is_flag=True, help="Emit the forecast as JSON.")
def forecast(
    class_path: str,
    base: str,
    risk: float,
    clamp_nonnegative: bool,
    currency: str,
    basis: str,
    base_year: int | None,
    as_json: bool,
) -> None:
    """Uplifted budget for a base estimate at the accepted risk."""
    ref_class = load_class(class_path)
    money = _build_money(base, currency, basis, base_year)
    result = forecast_with_uplift(
        money, ref_class, UpliftQuery(risk), clamp_nonnegative=clamp_nonnegative
    )
    if as_json:
        _echo_json(
            {
                "base": money.to_json(),
                "risk": risk,
                "uplift_fraction": result.uplift_fraction,
                "budget": result.budget.to_json(),
                "uplift_amount": result.allowance.uplift_amount.to_json(),
                "risk_allowance": result.allowance.allowance_amount.to_json(),
            }
        )
    else:
        click.echo(f"base       {money}")
        click.echo(f"uplift     {result.uplift_fraction * 100:+.2f}%")
        click.echo(f"budget     {result.budget}")
        click.echo(f"allowance  {result.allowance.allowance_amount}")


@cli.command()
@click.option("--class", "class_path", required=True, type=click.Path(dir_okay=False), help="Cost-overrun reference class JSON file.")
@click.option("--base", required=True, help="Base cost estimate (number; unit via --currency/--basis).")
@click.option("--risk", type=float, required=True, help="Acceptable probability of exceeding the budget.")
@click.option("--clamp-nonnegative", is_flag=True, help="Floor a negative uplift at zero instead of warning.")
@_money_options
@click.option("--json", "as_json", is_flag=True, help="Emit the allowance as JSON.")
def allowance(
    class_path: str,
    base: str,
    risk: float,
    clamp_nonnegative: bool,
    currency: str,
    basis: str,
    base_year: int | None,
    as_json: bool,
) -> None:
    """Risk allowance (half the uplift amount) for a base estimate."""
    ref_class = load_class(class_path)
    money = _build_money(base, currency, basis, base_year)
    result = forecast_with_uplift(
        money, ref_class, UpliftQuery(risk), clamp_nonnegative=clamp_nonnegative
    )
    if as_json:
        _echo_json(
            {
                "uplift_amount": result.allowance.uplift_amount.to_json(),
                "risk_allowance": result.allowance.allowance_amount.to_json(),
            }
        )
    else:
        click.echo(f"uplift amount  {result.allowance.uplift_amount}")
        click.echo(f"allowance      {result.allowance.allowance_amount}")


@cli.command(name="regress")
@click.option("--mean", type=float, required=True, help="Reference class mean of the outcome variable.")
@click.option("--intuitive", type=float, required=True, help="Inside-view estimate to correct.")
@click.option("--rho", type=float, required=True, help="Reliability of the intuitive estimate, in [0, 1].")
@click.option(
    "--variable",
    type=click.Choice([v.value for v in EstimateVariable]),
    default=EstimateVariable.TOTAL_COST.value,
    show_default=True,
    help="What the mean and the estimate are denominated in.",
)
@click.option("--json", "as_json", is_flag=True, help="Emit the regressed forecast as JSON.")
def regress_cmd(mean: float, intuitive: float, rho: float, variable: str, as_json: bool) -> None:
    """Correct an intuitive estimate toward the class mean."""
    var = EstimateVariable(variable)
    result = regress(
        mean,
        IntuitiveEstimate(intuitive, var),
        ReliabilityEstimate(rho, "subjective"),
        mean_variable=var,
    )
    if as_json:
        _echo_json(result.to_json())
    else:
        click.echo(f"corrected {result.corrected:g}")


@cli.command()
@click.argument("profile_path", metavar="PROFILE")
@click.option("--name", default=None, help="Profile name when the file holds several.")
@click.option(
    "--thresholds",
    default="0.5,0.5",
    show_default=True,
    help="Learning,alignment thresholds for the quadrant boundaries.",
)
@click.option("--json", "as_json", is_flag=True, help="Emit the diagnosis as JSON.")
def diagnose(profile_path: str, name: str | None, thresholds: str, as_json: bool) -> None:
    """Say whether forecast errors look like delusion, deception, or both."""
    try:
        t_learning, t_alignment = (float(part) for part in thresholds.split(","))
    except ValueError:
        raise click.UsageError("--thresholds must look like 0.5,0.5")
    profile = load_profile(profile_path, name=name)
    quadrant = classify(profile, (t_learning, t_alignment))
    if as_json:
        _echo_json(
            {
                "name": profile.name,
                "learning_score": profile.learning_score,
                "alignment_score": profile.alignment_score,
                "thresholds": [t_learning, t_alignment],
                "quadrant": quadrant.value,
            }
        )
    else:
        if profile.name:
            click.echo(f"profile    {profile.name}")
        click.echo(f"learning   {profile.learning_score:.3f}")
        click.echo(f"alignment  {profile.alignment_score:.3f}")
        click.echo(f"quadrant   {quadrant.value}")


@cli.command(name="check-funding")
@click.argument("funding_path", metavar="FUNDING")
@click.option("--json", "as_json", is_flag=True, help="Emit the findings as JSON.")
def check_funding_cmd(funding_path: str, as_json: bool) -> None:
    """Check a funding structure against the accountability rules."""
    findings = check_funding(load_funding(funding_path))
    if as_json:
        _echo_json([f.to_json() for f in findings])
    else:
        _print_findings(findings)


@cli.command()
@click.option("--amount", required=True, help="The cost increase to share.")
@click.option("--prior", default="0", show_default=True, help="Cumulative earlier increases already charged against the allowance.")
@click.option("--allowance", "allowance_", required=True, help="The ring-fenced risk allowance.")
@_money_options
@click.option("--json", "as_json", is_flag=True, help="Emit the split as JSON.")
def apportion(
    amount: str,
    prior: str,
    allowance_: str,
    currency: str,
    basis: str,
    base_year: int | None,
    as_json: bool,
) -> None:
    """Split a cost increase between promoter and funder."""
    event = CostIncreaseEvent(
        amount=_build_money(amount, currency, basis, base_year),
        cumulative_prior_increases=_build_money(prior, currency, basis, base_year),
        risk_allowance=_build_money(allowance_, currency, basis, base_year),
    )
    result = apportion_cost_increase(event)
    if as_json:
        _echo_json(
            {
                "local_share": result.local_share.to_json(),
                "funder_share": result.funder_share.to_json(),
                "requires_new_approval": result.requires_new_approval,
            }
        )
    else:
        click.echo(f"local share   {result.local_share}")
        click.echo(f"funder share  {result.funder_share}")
        click.echo(
            f"new approval required: {'yes' if result.requires_new_approval else 'no'}"
        )


@cli.command(name="risk-register")
@click.argument("register_path", metavar="REGISTER")
@click.option("--json", "as_json", is_flag=True, help="Emit the findings as JSON.")
def risk_register(register_path: str, as_json: bool) -> None:
    """Check a risk register for category coverage and ownership."""
    findings = validate_risk_register(load_register(register_path))
    if as_json:
        _echo_json([f.to_json() for f in findings])
    else:
        _print_findings(findings)


@cli.command()
@click.argument("cashflow_path", metavar="CASHFLOWS")
@click.option("--rate", type=float, required=True, help="Discount rate for the NPV.")
@click.option("--irr", "want_irr", is_flag=True, help="Also solve for the internal rate of return.")
@click.option("--json", "as_json", is_flag=True, help="Emit the appraisal as JSON.")
def appraise(cashflow_path: str, rate: float, want_irr: bool, as_json: bool) -> None:
    """Discount a cashflow schedule: NPV, and optionally the IRR."""
    flows = load_cashflows(cashflow_path)
    value = compute_npv(flows, rate)
    rate_of_return = compute_irr(flows) if want_irr else None
    if as_json:
        out: dict = {"rate": rate, "npv": value}
        if rate_of_return is not None:
            out["irr"] = rate_of_return
        _echo_json(out)
    else:
        click.echo(f"npv {value:,.4f} at rate {rate:g}")
        if rate_of_return is not None:
            click.echo(f"irr {rate_of_return:.6f}")


@cli.command(name="simulate")
@click.argument("config_path", metavar="CONFIG")
@click.option("--trials", type=int, default=None, help="Override the configured trial count.")
@click.option("--seed", type=int, default=None, help="Override the configured seed.")
@click.option("--debias/--no-debias", "debias", default=None, help="Override whether budgets are uplifted from the reference half.")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write the full result (including the overrun sample) here as JSON.")
@click.option("--calibration-csv", type=click.Path(dir_okay=False), default=None, help="Write the calibration rows here as CSV.")
@click.option("--plot", type=click.Path(dir_okay=False), default=None, help="Render the calibration chart to this PNG.")
@click.option("--json", "as_json", is_flag=True, help="Emit the result (without the sample) as JSON.")
def simulate_cmd(
    config_path: str,
    trials: int | None,
    seed: int | None,
    debias: bool | None,
    out: str | None,
    calibration_csv: str | None,
    plot: str | None,
    as_json: bool,
) -> None:
    """Run the bias simulator and score uplift calibration."""
    config = load_config(config_path)
    overrides = {}
    if trials is not None:
        overrides["trials"] = trials
    if seed is not None:
        overrides["seed"] = seed
    if debias is not None:
        overrides["debias"] = debias
    if overrides:
        config = dataclasses.replace(config, **overrides)
    result = simulate(config)
    rows = calibration_report(result)
    if out:
        result.save(out)
    if calibration_csv:
        write_calibration_csv(rows, calibration_csv)
    if plot:
        from .plots import plot_calibration

        plot_calibration(rows, plot)
    if as_json:
        doc = result.to_json()
        del doc["realized_overruns"]
        doc["calibration"] = [row._asdict() for row in rows]
        _echo_json(doc)
    else:
        click.echo(
            f"{result.n_projects_total:,} project(s) over {config.trials:,} trial(s)"
        )
        click.echo(f"mean overrun     {result.mean_overrun:+.4f}")
        click.echo(f"regression error {result.regression_error:,.4f}")
        click.echo("")
        click.echo("p      target  empirical  tolerance  ok")
        for row in rows:
            ok = "yes" if row.within_tolerance else "no"
            click.echo(
                f"{row.p:<5g}  {row.target:.3f}   {row.empirical:.4f}     "
                f"{row.tolerance:.4f}     {ok}"
            )
        for path in (out, calibration_csv, plot):
            if path:
                click.echo(f"wrote {path}")


@cli.command(name="report")
@click.argument("dataset_path", metavar="DATASET")
@click.option("--filter", "filter_path", required=True, type=click.Path(dir_okay=False), help="Class filter JSON file.")
@click.option("--base", required=True, help="Base cost estimate (number; unit via --currency/--basis).")
@click.option("--risk", type=float, required=True, help="Acceptable probability of exceeding the budget.")
@click.option("--intuitive", type=float, required=True, help="Inside-view estimate: a deviation fraction, or a total cost with --mean.")
@click.option("--rho", type=float, required=True, help="Reliability of the intuitive estimate, in [0, 1].")
@click.option("--mean", type=float, default=None, help="Total-cost class mean; switches regression to cost space.")
@click.option("--clamp-nonnegative", is_flag=True, help="Floor a negative uplift at zero instead of warning.")
@_money_options
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write the report as JSON here.")
@click.option("--ecdf-csv", type=click.Path(dir_okay=False), default=None, help="Write the class ECDF as CSV here.")
@click.option("--plot", type=click.Path(dir_okay=False), default=None, help="Render the ECDF with uplift markers to this PNG.")
@click.option("--json", "as_json", is_flag=True, help="Emit the report as JSON.")
def report_cmd(
    dataset_path: str,
    filter_path: str,
    base: str,
    risk: float,
    intuitive: float,
    rho: float,
    mean: float | None,
    clamp_nonnegative: bool,
    currency: str,
    basis: str,
    base_year: int | None,
    out: str | None,
    ecdf_csv: str | None,
    plot: str | None,
    as_json: bool,
) -> None:
    """Full five-step narrative: class, distribution, correction, budget."""
    dataset, vreport = load_dataset(dataset_path)
    if dataset is None:
        raise DatasetInvalid(vreport)
    class_filter = _load_filter(filter_path)
    variable = (
        EstimateVariable.TOTAL_COST if mean is not None else EstimateVariable.DEVIATION_FRACTION
    )
    doc, _ = five_step_report(
        dataset,
        class_filter,
        _build_money(base, currency, basis, base_year),
        UpliftQuery(risk),
        IntuitiveEstimate(intuitive, variable),
        ReliabilityEstimate(rho, "subjective"),
        cost_space_mean=mean,
        clamp_nonnegative=clamp_nonnegative,
    )
    if out:
        # the saved report matches whatever the terminal shows
        rendered = (
            json.dumps(doc.to_json(), indent=2) + "\n" if as_json else doc.to_text()
        )
        try:
            with open(out, "w", encoding="utf-8") as fh:
                fh.write(rendered)
        except OSError as exc:
            raise IoError(f"cannot write {out}: {exc}") from exc
    if ecdf_csv:
        doc.summary.write_ecdf_csv(ecdf_csv)
    if plot:
        from .plots import plot_ecdf

        plot_ecdf(
            doc.summary,
            plot,
            uplifts=[(risk, doc.uplift_fraction)],
            title="Reference class deviations",
        )
    if as_json:
        _echo_json(doc.to_json())
    else:
        click.echo(doc.to_text(), nl=False)
        for path in (out, ecdf_csv, plot):
            if path:
                click.echo(f"wrote {path}")


def main(argv: list[str] | None = None) -> int:
    """Entry point: dispatch a subcommand and map errors to exit codes."""
    previous_showwarning = warnings.showwarning

    def _print_warning(message, category, filename, lineno, file=None, line=None) -> None:
        if issubclass(category, RefcastWarning):
            click.echo(f"refcast: warning: {message}", err=True)
        else:
            previous_showwarning(message, category, filename, lineno, file, line)

    warnings.showwarning = _print_warning
    try:
        cli.main(args=argv, prog_name="refcast", standalone_mode=False)
    except RefcastError as exc:
        click.echo(f"refcast: error[{exc.code}]: {exc}", err=True)
        return exc.exit_code
    except click.exceptions.Abort:
        click.echo("refcast: aborted", err=True)
        return 1
    except click.exceptions.ClickException as exc:
        code = "IO" if isinstance(exc, click.exceptions.FileError) else "USAGE"
        click.echo(f"refcast: error[{code}]: {exc.format_message()}", err=True)
        return 3 if code == "IO" else 4
    finally:
        warnings.showwarning = previous_showwarning
    return 0


if __name__ == "__main__":
    sys.exit(main())
