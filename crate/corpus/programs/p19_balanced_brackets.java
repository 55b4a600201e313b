import java.util.Stack;

public class BalancedBrackets {
    public static int main(String[] args) {
        String s = "([]{})";
        Stack<Character> stack = new Stack<>();
        int depth = 0;
        int maxDepth = 0;
        for (int i = 0; i < s.length(); i++) {
            char c = s.charAt(i);
            if (c == '(' || c == '[' || c == '{') {
                stack.push(c);
                depth++;
                maxDepth = Math.max(maxDepth, depth);
            } else {
                stack.pop();
                depth--;
            }
        }
        int ok = stack.isEmpty() ? 1 : 0;
        return maxDepth * ok;
    }
}
