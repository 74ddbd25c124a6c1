#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Tipos de error de la biblioteca de búsqueda en árboles por bandidos

Todas las excepciones heredan también de ValueError, de modo que el código
que ya captura ValueError para configuraciones inválidas sigue funcionando.
"""


class BanditTreeError(ValueError):
    """Error base de la biblioteca"""


class TreeConstructionError(BanditTreeError):
    """Profundidad inválida o árbol demasiado grande para la plataforma"""


class InvalidPathError(BanditTreeError):
    """Trayectoria que no va de la raíz a una hoja de forma conexa"""


class RewardRangeError(BanditTreeError):
    """Recompensa fuera del intervalo [0, 1]"""


class ConfigError(BanditTreeError):
    """Parámetros de política, ejecución o experimento inválidos"""


class MissingChildBoundsError(BanditTreeError):
    """Se pidió la cota de un nodo interno sin las cotas de sus hijos"""


class EnvironmentSpecError(BanditTreeError):
    """Entorno de recompensas mal especificado u hoja fuera de rango"""
