"""Post-run consistency checks over the match ledger and provider states"""
import logging
from collections import defaultdict
from typing import Dict, List, Sequence, Set, Tuple

from .adversary import cyclic_remaining
from .market_state import MarketState, decay_and_restake
from .market_types import JobStatus, PeriodReport, ProviderRecord, ProviderState, RestakePolicy
from .payout import total_return

logger = logging.getLogger(__name__)


class LedgerValidator:
    def __init__(self):
        self.logger = logging.getLogger(__name__)
        self.problems: List[str] = []

    def _fail(self, message: str) -> None:
        self.problems.append(message)
        self.logger.error(message)

    def validate_run(self, state: MarketState, reports: Sequence[PeriodReport]) -> Tuple[bool, List[str]]:
        """Re-check a finished run; returns (ok, problems)"""
        self.problems = []
        self._check_bijection(state)
        self._check_jobs(state)
        self._check_overlap(state)
        self._check_prices(reports)
        self._check_providers(state)
        self._check_payouts(state)
        if not self.problems:
            self.logger.info(f"ledger valid: {len(state.ledger.records)} matches over {len(reports)} periods")
        return not self.problems, list(self.problems)

    def _check_bijection(self, state: MarketState) -> None:
        seen: Dict[int, Tuple[Set[int], Set[int]]] = defaultdict(lambda: (set(), set()))
        for record in state.ledger.records:
            providers, jobs = seen[record.period]
            if record.provider_id in providers or record.job_id in jobs:
                self._fail(f"period {record.period}: provider {record.provider_id} or job {record.job_id} matched twice")
            providers.add(record.provider_id)
            jobs.add(record.job_id)

    def _check_jobs(self, state: MarketState) -> None:
        by_job = defaultdict(list)
        for record in state.ledger.records:
            by_job[record.job_id].append(record)
        for job_id, records in by_job.items():
            job = state.jobs[job_id]
            records.sort(key=lambda r: r.period)
            if any(r.feasible for r in records[:-1]):
                self._fail(f"job {job_id}: a feasible match was followed by another match")
            worked = sum(r.hours for r in records)
            if job.chosen_hours is None or worked > job.chosen_hours:
                self._fail(f"job {job_id}: worked {worked} hours against a choice of {job.chosen_hours}")
            elif job.status is JobStatus.FINISHED and worked != job.chosen_hours:
                self._fail(f"job {job_id}: finished after {worked} of {job.chosen_hours} hours")

    def _check_overlap(self, state: MarketState) -> None:
        by_provider = defaultdict(list)
        for record in state.ledger.records:
            by_provider[record.provider_id].append(record)
        for provider_id, records in by_provider.items():
            records.sort(key=lambda r: r.period)
            for before, after in zip(records, records[1:]):
                if after.period <= before.last_hour:
                    self._fail(f"provider {provider_id}: overlapping matches at {after.period}")

    def _check_prices(self, reports: Sequence[PeriodReport]) -> None:
        for report in reports:
            if report.price < report.floor_price:
                self._fail(f"period {report.period}: price {report.price} below floor {report.floor_price}")
            for record in report.matches:
                if record.reported_cost > record.price:
                    self._fail(f"period {report.period}: provider {record.provider_id} matched above the price")

    def _check_providers(self, state: MarketState) -> None:
        for provider in state.providers.values():
            if provider.remaining < 0:
                self._fail(f"provider {provider.provider_id}: negative remaining time")
            if provider.state is ProviderState.ASSIGNED:
                if provider.assigned_job is None or provider.remaining <= 0:
                    self._fail(f"provider {provider.provider_id}: assigned without a job or time")
            elif provider.assigned_job is not None:
                self._fail(f"provider {provider.provider_id}: {provider.state.value} but holds job {provider.assigned_job}")

    def _check_payouts(self, state: MarketState) -> None:
        horizon = state.period
        for provider_id, paid in state.payouts.cumulative.items():
            owed = total_return(provider_id, state.ledger, horizon)
            if abs(paid - owed) > 1:
                self._fail(f"provider {provider_id}: paid {paid} against exact {owed}")

    def check_cyclic_residues(self, initial_stake: int, periods: int) -> Tuple[bool, str]:
        """Step one cyclic provider and compare its remaining time with the residue rule"""
        provider = ProviderRecord(0, 0, 0, initial_stake, remaining=initial_stake, state=ProviderState.IDLE,
                                  restake_policy=RestakePolicy.CYCLIC, staked=True)
        state = MarketState.create([provider], [], 0)
        for t in range(periods):
            expected = cyclic_remaining(initial_stake, t)
            if provider.remaining != expected:
                message = f"period {t}: remaining {provider.remaining}, expected {expected}"
                self.logger.error(message)
                return False, message
            decay_and_restake(state)
        return True, f"{periods} periods follow the residue rule"
