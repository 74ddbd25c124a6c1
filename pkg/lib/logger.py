#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Módulo para configuración y gestión de logs

Este módulo proporciona funciones para configurar y obtener los loggers de
los experimentos. Los módulos de la biblioteca registran bajo el logger raíz
'bandit_tree'; el ejecutor de experimentos le añade archivo y consola.
"""

import os
import sys
import logging
from logging.handlers import RotatingFileHandler

ROOT_LOGGER = 'bandit_tree'

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
DATE_FORMAT = '%Y-%m-%d %H:%M:%S'

# Diccionario global de loggers
_loggers = {}


def setup_logger(name, log_file, debug_mode=False, console=True):
    """
    Configura un logger con un nombre y archivo específicos

    Args:
        name (str): Nombre del logger
        log_file (str): Ruta al archivo de log
        debug_mode (bool): Si es True, configura el nivel de log a DEBUG
        console (bool): Si es False no se añade el handler de consola (--quiet)

    Returns:
        logging.Logger: El logger configurado
    """
    if name in _loggers:
        return _loggers[name]

    # Crear directorio para logs si no existe
    log_dir = os.path.dirname(log_file)
    if log_dir and not os.path.exists(log_dir):
        os.makedirs(log_dir)

    logger = logging.getLogger(name)
    logger.setLevel(logging.DEBUG if debug_mode else logging.INFO)

    # Evitar duplicación de handlers
    if logger.handlers:
        _loggers[name] = logger
        return logger

    formatter = logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT)

    file_handler = RotatingFileHandler(
        log_file,
        maxBytes=10*1024*1024,  # 10 MB
        backupCount=5
    )
    file_handler.setFormatter(formatter)
    logger.addHandler(file_handler)

    if console:
        console_handler = logging.StreamHandler(sys.stdout)
        console_handler.setFormatter(formatter)
        logger.addHandler(console_handler)

    _loggers[name] = logger
    return logger


def get_logger(name):
    """
    Obtiene un logger previamente configurado

    Args:
        name (str): Nombre del logger

    Returns:
        logging.Logger: El logger si existe, o un logger básico si no existe
    """
    if name in _loggers:
        return _loggers[name]

    logger = logging.getLogger(name)
    # Los loggers hijos de 'bandit_tree' propagan al raíz configurado
    if name.startswith(ROOT_LOGGER + '.') or logger.handlers:
        return logger

    logger.setLevel(logging.INFO)
    handler = logging.StreamHandler(sys.stdout)
    handler.setFormatter(logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT))
    logger.addHandler(handler)
    return logger


def reset_loggers():
    """Cierra y olvida los handlers registrados (tests y ejecuciones repetidas)"""
    for logger in _loggers.values():
        for handler in list(logger.handlers):
            handler.close()
            logger.removeHandler(handler)
    _loggers.clear()
