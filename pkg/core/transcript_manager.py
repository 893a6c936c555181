import csv
import json
import logging
import os
from typing import Dict, List, Optional

import numpy as np

from .binning import build
from .constraints import breakpoints, expected_h, h_table, mix
from .experts import make_experts
from .feasibility import FEASIBILITY_TOL, KappaDist
from .losses import loss_from_literal, loss_to_literal, vshape_decompose
from .predictors import RoundRecord, Transcript, truthful_predict

logger = logging.getLogger(__name__)

TRANSCRIPT_SUFFIX = '.jsonl'
CSV_COLUMNS = ('t', 'r', 'b', 'p', 'loss_at_p', 'loss_min', 'outcome')


def _dumps(payload: Dict) -> str:
    return json.dumps(payload, sort_keys=True, separators=(',', ':'))


def record_to_dict(record: RoundRecord) -> Dict:
    data = {
        't': record.t,
        'p': record.prediction,
        'loss': loss_to_literal(record.loss),
        'outcome': record.outcome,
    }
    if record.kappa is not None:
        support = np.flatnonzero(record.kappa.probs > 0.0)
        data['kappa'] = {'size': len(record.kappa), 'index': support.tolist(),
                         'prob': record.kappa.probs[support].tolist()}
        data['theta'] = list(record.theta)
        data['theta_index'] = record.theta_index
    if record.pi is not None:
        data['pi'] = [[loss_to_literal(loss), w] for loss, w in record.pi]
    return data


def record_from_dict(data: Dict) -> RoundRecord:
    loss = loss_from_literal(data['loss'])
    kappa = None
    if 'kappa' in data:
        probs = np.zeros(data['kappa']['size'])
        probs[data['kappa']['index']] = data['kappa']['prob']
        kappa = KappaDist(probs)
    pi = None
    if 'pi' in data:
        pi = [(loss_from_literal(literal), float(w)) for literal, w in data['pi']]
    return RoundRecord(
        t=int(data['t']),
        prediction=float(data['p']),
        loss=loss,
        mixture=vshape_decompose(loss),
        outcome=data.get('outcome'),
        kappa=kappa,
        theta=tuple(data['theta']) if 'theta' in data else None,
        theta_index=data.get('theta_index'),
        pi=pi,
    )


class TranscriptManager:
    def __init__(self, output_dir: str):
        self.output_dir = output_dir
        self.transcript_dir = os.path.join(output_dir, 'transcripts')

    @staticmethod
    def cell_id(algorithm: str, horizon: int, seed: int) -> str:
        return f"{algorithm}_T{horizon}_s{seed}"

    def _ensure_dirs(self) -> None:
        os.makedirs(self.transcript_dir, exist_ok=True)

    def write_transcript(self, transcript: Transcript, cell_id: str) -> Dict:
        try:
            self._ensure_dirs()
            path = os.path.join(self.transcript_dir, cell_id + TRANSCRIPT_SUFFIX)
            with open(path, 'w', encoding='utf-8') as handle:
                handle.write(_dumps({'config': transcript.config}) + '\n')
                for record in transcript.records:
                    handle.write(_dumps(record_to_dict(record)) + '\n')
            csv_path = os.path.join(self.transcript_dir, cell_id + '.csv')
            self._write_round_csv(transcript, csv_path)
            logger.debug("wrote %s (%d rounds)", path, len(transcript))
            return {'success': True, 'path': path, 'csv_path': csv_path}
        except OSError as e:
            logger.warning("could not write transcript %s: %s", cell_id, e)
            return {'success': False, 'error': str(e)}

    def _write_round_csv(self, transcript: Transcript, path: str) -> None:
        with open(path, 'w', newline='', encoding='utf-8') as handle:
            writer = csv.writer(handle)
            writer.writerow(CSV_COLUMNS)
            for rec in transcript.records:
                r, b = rec.theta if rec.theta is not None else ('', rec.prediction)
                writer.writerow([rec.t, r, b, rec.prediction,
                                 repr(float(rec.loss(rec.prediction))),
                                 repr(float(rec.loss.knot_values.min())),
                                 '' if rec.outcome is None else repr(rec.outcome)])

    def load_transcript(self, path: str) -> Transcript:
        with open(path, 'r', encoding='utf-8') as handle:
            header = json.loads(handle.readline())
            transcript = Transcript(config=header['config'])
            for line in handle:
                if line.strip():
                    transcript.append(record_from_dict(json.loads(line)))
        return transcript

    def list_transcripts(self, directory: Optional[str] = None) -> List[Dict]:
        directory = directory or self.transcript_dir
        if not os.path.isdir(directory):
            return []
        found = []
        for name in sorted(os.listdir(directory)):
            if name.endswith(TRANSCRIPT_SUFFIX):
                path = os.path.join(directory, name)
                found.append({'name': name[:-len(TRANSCRIPT_SUFFIX)], 'path': path,
                              'size': os.path.getsize(path)})
        return found

    def write_summary(self, rows: List[Dict], columns: List[str]) -> str:
        os.makedirs(self.output_dir, exist_ok=True)
        path = os.path.join(self.output_dir, 'summary.csv')
        with open(path, 'w', newline='', encoding='utf-8') as handle:
            writer = csv.DictWriter(handle, fieldnames=columns, extrasaction='ignore')
            writer.writeheader()
            for row in rows:
                writer.writerow(row)
        return path

    def write_json(self, payload: Dict, name: str) -> str:
        os.makedirs(self.output_dir, exist_ok=True)
        path = os.path.join(self.output_dir, name)
        with open(path, 'w', encoding='utf-8') as handle:
            json.dump(payload, handle, sort_keys=True, indent=2)
        return path

    def verify_transcript(self, path: str) -> Dict:
        """Replay a transcript's decision path and re-check each round."""
        try:
            transcript = self.load_transcript(path)
        except (OSError, ValueError, KeyError) as e:
            return {'success': False, 'error': str(e)}
        config = transcript.config
        algorithm = config.get('algorithm')
        problems = []
        max_violation = None

        if algorithm == 'efficient':
            sys = build(config['gamma'])
            V = breakpoints(sys)
            table = h_table(sys, V)
            experts = make_experts(config.get('expert', 'msmwc'), 4 * len(sys), config['horizon'])
            max_violation = -np.inf
            for rec in transcript.records:
                hbar = mix(sys, experts.weights())
                max_violation = max(max_violation, rec.kappa.worst_case(hbar.matrix(V, table)))
                if rec.prediction != sys.theta[rec.theta_index][1]:
                    problems.append(f"round {rec.t}: prediction is not the sampled bin")
                if rec.kappa.probs[rec.theta_index] <= 0.0:
                    problems.append(f"round {rec.t}: sampled a bin outside kappa's support")
                experts.update((rec.kappa.probs[:, None] * expected_h(sys, rec.mixture.phi)).ravel())
            if max_violation > FEASIBILITY_TOL:
                problems.append(f"kappa infeasible: max_v E[hbar] = {max_violation:.3e}")
        elif algorithm == 'truthful':
            sys = build(config['gamma'])
            for rec in transcript.records:
                theta = truthful_predict(sys, [(vshape_decompose(loss), w) for loss, w in rec.pi])
                if tuple(theta) != tuple(rec.theta):
                    problems.append(f"round {rec.t}: replayed bin {theta} != recorded {rec.theta}")

        return {
            'success': not problems,
            'transcript': transcript,
            'rounds': len(transcript),
            'max_violation': max_violation,
            'problems': problems,
        }
