#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Utilidades de consola y formato
"""

import math


# Colores para la consola
class Colors:
    GREEN = '\033[92m'
    YELLOW = '\033[93m'
    RED = '\033[91m'
    BLUE = '\033[94m'
    BOLD = '\033[1m'
    END = '\033[0m'


def format_real(value: float) -> str:
    """Serializa un real con 17 cifras significativas ('inf' para infinito)"""
    if math.isinf(value):
        return 'inf' if value > 0 else '-inf'
    return format(value, '.17g')


def print_banner(title: str) -> None:
    print(f"\n{Colors.BOLD}{'='*60}{Colors.END}")
    print(f"{Colors.BOLD}{title}{Colors.END}")
    print(f"{Colors.BOLD}{'='*60}{Colors.END}")


def print_summary(rows: dict, ok: bool) -> None:
    """
    Muestra el resumen de un experimento

    Args:
        rows (dict): Etiqueta -> valor
        ok (bool): Resultado global
    """
    print_banner("Resumen del experimento")
    for label, value in rows.items():
        print(f"{Colors.BLUE}{label}:{Colors.END} {value}")
    if ok:
        print(f"\n{Colors.GREEN}¡Experimento completado!{Colors.END}")
    else:
        print(f"\n{Colors.RED}El experimento falló.{Colors.END}")
