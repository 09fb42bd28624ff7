"""
工具包统一异常类型
CLI 根据异常类型决定退出码：校验类错误与情景不满足界公式前提 → 2，其余运行时错误 → 1
"""


class DpmToolkitError(Exception):
    """所有自定义异常的基类"""


class ConfigValidationError(DpmToolkitError, ValueError):
    """配置字段校验失败，field 为出错字段名"""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"配置字段 '{field}' 无效：{message}")


class DatasetFormatError(DpmToolkitError, ValueError):
    """CSV 解析失败，row/column 指向出错位置（row 为文件中的行号，表头为第 1 行）"""

    def __init__(self, message, row=None, column=None):
        self.row = row
        self.column = column
        location = []
        if row is not None:
            location.append(f"第 {row} 行")
        if column is not None:
            location.append(f"列 '{column}'")
        prefix = f"[{'，'.join(location)}] " if location else ""
        super().__init__(f"{prefix}{message}")


class NoAdmissibleSplitError(DpmToolkitError, ValueError):
    """2·τ_e > ñ，任何划分都会违反最小簇大小"""


class BoundDomainError(DpmToolkitError, ValueError):
    """界公式的前提不成立或因子无定义"""


class InstanceTooLargeError(DpmToolkitError):
    """精确枚举超出可行规模"""


class GeometryError(DpmToolkitError, ValueError):
    """请求的簇间距离在几何上不可实现"""
