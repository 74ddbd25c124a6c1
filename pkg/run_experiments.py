#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Script principal para los experimentos de búsqueda en árboles con bandidos

Ejecuta UCT, UCT modificado, Flat UCB, BAST y el árbol creciente sobre los
entornos configurados, con réplicas sembradas, y escribe los resultados
(curvas de regret, histogramas de hojas, árboles, cotas teóricas y barridos
de δ) en el directorio de salida.

Uso:
    python run_experiments.py run config/concentration.yaml
    python run_experiments.py sweep config/delta_sweep.yaml --reps 20 --workers 4
"""

import os
import sys
import argparse
from pathlib import Path

from dotenv import load_dotenv

from lib.config import load_spec, parse_real
from lib.errors import BanditTreeError
from lib.experiment import delta_sweep, run_experiment
from lib.logger import ROOT_LOGGER, setup_logger
from lib.utils import Colors, format_real, print_banner, print_summary

# Versión del ejecutor de experimentos
VERSION = "1.0.0"

LOG_FILE_NAME = 'experiments.log'


def parse_arguments(argv=None):
    """Procesa los argumentos de línea de comandos"""
    parser = argparse.ArgumentParser(
        description=f'Experimentos de búsqueda en árboles con bandidos v{VERSION}',
        formatter_class=argparse.RawTextHelpFormatter
    )
    parser.add_argument('--version', '-v', action='version',
                        version=f'Experimentos de búsqueda en árboles con bandidos v{VERSION}')

    # Argumentos comunes a todos los comandos
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('config', help='Documento YAML/JSON del experimento')
    common.add_argument('--out', '-o', help='Directorio de salida (sustituye output_dir)')
    common.add_argument('--seed', '-s', type=int, help='Semilla base (sustituye seed)')
    common.add_argument('--reps', '-r', type=int, help='Número de réplicas (sustituye replications)')
    common.add_argument('--workers', '-w', type=int, help='Procesos en paralelo (sustituye workers)')
    common.add_argument('--config-dir', '-c', default=None,
                        help='Directorio con default_config.yaml (por defecto: ./config)')
    common.add_argument('--log-dir', '-l', default=None,
                        help='Directorio para archivos de log (o BANDIT_TREE_LOG_DIR)')
    common.add_argument('--quiet', '-q', action='store_true',
                        help='Sin salida por consola ni barras de progreso')
    common.add_argument('--debug', '-d', action='store_true',
                        help='Habilitar modo debug (logs detallados)')

    commands = parser.add_subparsers(dest='command', required=True)
    commands.add_parser('run', parents=[common],
                        help='Ejecuta el experimento para cada valor de rounds',
                        formatter_class=argparse.RawTextHelpFormatter)
    sweep = commands.add_parser('sweep', parents=[common],
                                help='Barrido de δ de BAST (una fila por δ)',
                                formatter_class=argparse.RawTextHelpFormatter)
    sweep.add_argument('--deltas', nargs='+',
                       help="Valores de δ (admite 'inf'); por defecto sweep.deltas")

    return parser.parse_args(argv)


def main(argv=None):
    """Función principal del ejecutor de experimentos"""
    load_dotenv()
    args = parse_arguments(argv)

    log_dir = args.log_dir or os.environ.get('BANDIT_TREE_LOG_DIR', './logs')
    logger = setup_logger(ROOT_LOGGER, os.path.join(log_dir, LOG_FILE_NAME),
                          debug_mode=args.debug, console=not args.quiet)

    if not args.quiet:
        print(f"\n{Colors.BOLD}Experimentos de búsqueda en árboles con bandidos v{VERSION}{Colors.END}")
    logger.info(f"Iniciando comando '{args.command}' con {args.config}")

    overrides = {
        'output_dir': args.out,
        'seed': args.seed,
        'replications': args.reps,
        'workers': args.workers,
    }
    try:
        spec = load_spec(Path(args.config), args.config_dir, overrides)
        if not args.quiet:
            print_banner(f"Experimento: {spec.name} ({spec.algorithm.value})")
            print(f"{Colors.BLUE}Profundidad:{Colors.END} {spec.depth}")
            print(f"{Colors.BLUE}Rondas:{Colors.END} {', '.join(str(n) for n in spec.rounds)}")
            print(f"{Colors.BLUE}Réplicas:{Colors.END} {spec.replications} (semilla base {spec.seed})")

        if args.command == 'sweep':
            deltas = None
            if args.deltas:
                deltas = [parse_real(d, '--deltas') for d in args.deltas]
            report = delta_sweep(spec, deltas, quiet=args.quiet)
        else:
            report = run_experiment(spec, quiet=args.quiet)
    except (BanditTreeError, OSError) as e:
        logger.debug("Detalle del error", exc_info=True)
        logger.error(f"El experimento falló: {e}")
        if not args.quiet:
            print(f"\n{Colors.RED}Error: {e}{Colors.END}")
            print(f"Revisa el log en {log_dir}/{LOG_FILE_NAME} para más detalles.")
        return 1

    if not args.quiet:
        rows = {'Archivos escritos': len(report.files), 'Directorio de salida': spec.output_dir}
        for row in report.rows:
            if args.command == 'sweep':
                label = f"n={row[0]} {row[1]}" + ('' if row[2] is None else f" δ={format_real(row[2])}")
                rows[label] = f"R_n/n = {row[4]:.6g}"
            else:
                rows[f"n={row[0]}"] = f"R_n/n = {row[2]:.6g}, R̄_n/n = {row[4]:.6g}"
        print_summary(rows, ok=True)
    logger.info("Experimento completado")
    return 0


if __name__ == "__main__":
    sys.exit(main())
