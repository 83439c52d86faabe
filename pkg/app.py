from flask import Flask, request, jsonify, Response
from kahler_core import (
    KahlerError, ConfigError, InvariantParams, k3_scheme, toy_trace, q_matrix_cp1, chi, lambda_mk,
    symmetric_eigen, laplacian_estimates, analytic_volume, fs_volume_ratio, load_reference
)
from kahler_core.k3_geometry import l_i
from kahler_core.monomial_basis import SCHEME_DEGREES
from kahler_core.utils import TOY_TABLE_ROWS, TOY_VARIANTS
import numpy as np
import logging
from datetime import datetime
import time
import csv
from io import StringIO

app = Flask(__name__)

app.config['JSONIFY_PRETTYPRINT_REGULAR'] = False
app.config['JSON_SORT_KEYS'] = False

logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

# Response cache
response_cache = {}
CACHE_TIMEOUT = 300  # 5 minutes
MAX_TOY_STEPS = 200
MAX_CP1_DEGREE = 60


def cached(cache_key):
    if cache_key in response_cache:
        data, timestamp = response_cache[cache_key]
        if time.time() - timestamp < CACHE_TIMEOUT:
            return data
    return None


def error_response(endpoint, e):
    logger.error(f"Error in {endpoint}: {str(e)}")
    status = e.http_status if isinstance(e, KahlerError) else 500
    return jsonify({"error": str(e)}), status


def toy_rows(variant, k, steps, start):
    trace = toy_trace(variant, k, start, steps)
    half = k // 2 + 1
    return [[r, *(float(v) for v in metric.values[:half])] for r, metric in enumerate(trace.params_by_step)]


@app.route('/toy/<variant>', methods=['GET'])
def toy(variant):
    """Iterates of a toy balancing map on CP^1, as JSON or CSV"""
    cache_key = f"toy_{variant}_{request.query_string.decode()}"
    try:
        if variant not in TOY_VARIANTS:
            raise ConfigError(f"Unknown toy variant '{variant}'; expected one of {TOY_VARIANTS}")
        k = request.args.get("k", 6, type=int)
        steps = request.args.get("steps", max(TOY_TABLE_ROWS[variant]), type=int)
        start = request.args.get("start")
        start = tuple(float(v) for v in start.split(',')) if start else None
        if not 0 <= steps <= MAX_TOY_STEPS or not 2 <= k <= MAX_CP1_DEGREE:
            raise ConfigError(f"Need 0 <= steps <= {MAX_TOY_STEPS} and 2 <= k <= {MAX_CP1_DEGREE}")

        rows = cached(cache_key)
        if rows is None:
            rows = toy_rows(variant, k, steps, start)
            response_cache[cache_key] = (rows, time.time())

        header = ['r', *(f"a_{p}" for p in range(k // 2 + 1))]
        if request.args.get("format") == "csv":
            output = StringIO()
            writer = csv.writer(output)
            writer.writerow(header)
            writer.writerows(rows)
            timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
            filename = f"toy_{variant}_k{k}_{timestamp}.csv"
            return Response(
                output.getvalue(),
                mimetype="text/csv",
                headers={"Content-disposition": f"attachment; filename={filename}"}
            )
        return jsonify({"variant": variant, "k": k, "columns": header, "rows": rows})

    except ValueError as e:
        return error_response('/toy', ConfigError(f"Invalid start values: {e}"))
    except Exception as e:
        return error_response('/toy', e)


@app.route('/spectrum/cp1', methods=['GET'])
def cp1_spectrum():
    """Eigenvalues of Q on CP^1 and the Laplacian estimates they imply"""
    cache_key = f"cp1_spectrum_{request.args.get('k', '')}"
    data = cached(cache_key)
    if data is not None:
        return jsonify(data)
    try:
        k = request.args.get("k", 6, type=int)
        if not 1 <= k <= MAX_CP1_DEGREE:
            raise ConfigError(f"k must lie in [1, {MAX_CP1_DEGREE}], got {k}")
        chis = symmetric_eigen(q_matrix_cp1(k)).eigenvalues
        report = laplacian_estimates(chis, k + 1, n=1)
        data = {"k": k, **report.as_dict()}
        response_cache[cache_key] = (data, time.time())
        return jsonify(data)
    except Exception as e:
        return error_response('/spectrum/cp1', e)


@app.route('/chi', methods=['GET'])
def chi_value():
    try:
        m = request.args.get("m", type=int)
        k = request.args.get("k", type=int)
        if m is None or k is None:
            raise ConfigError("Both m and k are required")
        return jsonify({"m": m, "k": k, "chi": chi(m, k), "lambda": lambda_mk(m, k)})
    except Exception as e:
        return error_response('/chi', e)


@app.route('/k3/volume/analytic', methods=['GET'])
def k3_analytic_volume():
    return jsonify({"L_I": l_i(), "volume": analytic_volume()})


@app.route('/reference/<table_id>', methods=['GET'])
def reference(table_id):
    try:
        return jsonify(load_reference(table_id))
    except ConfigError as e:
        logger.error(f"Error in /reference: {str(e)}")
        return jsonify({"error": str(e)}), 404


@app.route('/k3/volume-ratio', methods=['POST'])
def k3_volume_ratio():
    """mu/nu of the metric given by invariant parameters at points (x, y) of the surface"""
    try:
        data = request.get_json(silent=True)
        if not data or 'params' not in data or 'points' not in data:
            raise ConfigError("Request needs 'k', 'params' and 'points'")
        k = int(data.get('k', 6))
        if k not in SCHEME_DEGREES:
            raise ConfigError(f"k must be one of {SCHEME_DEGREES}, got {k}")
        params = InvariantParams(k3_scheme(k), data['params'])

        coords = np.asarray(data['points'], dtype=float)
        if coords.ndim != 2 or coords.shape[1] != 4:
            raise ConfigError("Each point is [x_re, x_im, y_re, y_im]")
        x = coords[:, 0] + 1j * coords[:, 1]
        y = coords[:, 2] + 1j * coords[:, 3]
        w = np.sqrt(1 + x ** 6 + y ** 6)
        ratios = fs_volume_ratio(params.scheme.expand(params.values), k, np.stack([x, y, w], axis=1))

        return jsonify({"k": k, "ratios": [float(r) for r in ratios]})
    except (TypeError, ValueError) as e:
        return error_response('/k3/volume-ratio', ConfigError(f"Invalid request: {e}"))
    except Exception as e:
        return error_response('/k3/volume-ratio', e)


@app.route('/health', methods=['GET'])
def health_check():
    return jsonify({
        "status": "healthy",
        "timestamp": datetime.now().isoformat(),
        "cache_size": len(response_cache),
        "schemes": [k3_scheme(k).name for k in SCHEME_DEGREES]
    })


def clear_old_cache():
    """Clear old cache entries"""
    current_time = time.time()
    keys_to_remove = [key for key, (_, timestamp) in response_cache.items()
                      if current_time - timestamp > CACHE_TIMEOUT]

    for key in keys_to_remove:
        del response_cache[key]

    if keys_to_remove:
        logger.info(f"Cleared {len(keys_to_remove)} old cache entries")
    return len(keys_to_remove)


@app.before_request
def purge_cache():
    clear_old_cache()


if __name__ == "__main__":
    print("Starting balanced metric server...")
    print("Available routes:")
    print("  /toy/<variant>       - Toy iteration table (t, t_nu, t_k)")
    print("  /spectrum/cp1        - Q spectrum on CP^1")
    print("  /chi                 - chi_{m,k} and lambda_{m,k}")
    print("  /k3/volume/analytic  - Exact volume of the K3 surface")
    print("  /k3/volume-ratio     - Volume ratio of a metric at surface points")
    print("  /reference/<table>   - Reference tables")
    print("  /health              - Health check")

    app.run(debug=True, host='0.0.0.0', port=5000, threaded=True)
